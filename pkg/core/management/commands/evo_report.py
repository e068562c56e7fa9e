# core/management/commands/evo_report.py
import os

from core.management.commands._evo_base import EvoBaseCommand
from core.use_cases.reporting.generar_reporte_uc import GenerarReporteUseCase


class Command(EvoBaseCommand):
    help = 'Genera la matriz por rango y paso y la curva de retención a partir de corridas terminadas'

    def add_arguments(self, parser):
        parser.add_argument('runs', nargs='+', help='Directorios de corridas (o raíces que las contienen).')
        parser.add_argument('--output-dir', default=None, help='Por defecto <primer run>/report.')

    def run(self, **options):
        salida = options['output_dir'] or os.path.join(options['runs'][0], 'report')
        resultado = GenerarReporteUseCase(self.repos()['reporte_repo']).ejecutar(options['runs'], salida)
        self.stdout.write(self.style.SUCCESS(f"📊 Reporte de {len(resultado['runs'])} corridas"))
        for nombre, ruta in resultado['files'].items():
            self.stdout.write(f"  - {nombre}: {ruta}")
