# core/management/commands/evo_sweep.py
from core.management.commands._evo_base import EvoBaseCommand
from core.management.commands.evo_edit import agregar_artefactos_base, rutas_artefactos
from core.shared.enums import MetodoEdicion
from core.use_cases.barrido_semillas_uc import BarridoSemillasUseCase
from core.use_cases.dtos import BarridoSemillasDTO
from core.use_cases.editar_stream_uc import EditarStreamUseCase


class Command(EvoBaseCommand):
    help = 'Repite una corrida de edición con varias semillas y reporta la mediana'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        agregar_artefactos_base(parser)
        parser.add_argument('--output-dir', required=True)
        parser.add_argument('--seeds', type=int, nargs='+', default=[0, 1, 2, 3, 4])

    def run(self, **options):
        cfg = self.cargar_config(options)
        checkpoint, tokenizer, corpus = rutas_artefactos(options)
        repos = self.repos()
        uc = BarridoSemillasUseCase(EditarStreamUseCase(**repos), repos['reporte_repo'])

        self.stdout.write(f"🎲 Barrido de {len(options['seeds'])} semillas ({options['method']})...")
        resultado = uc.ejecutar(cfg, BarridoSemillasDTO(
            output_dir=options['output_dir'],
            checkpoint_path=checkpoint,
            tokenizer_path=tokenizer,
            corpus_path=corpus,
            seeds=tuple(options['seeds']),
            method=MetodoEdicion(options['method']),
            limit=options['limit'],
        ))
        self.stdout.write(self.style.SUCCESS(f"✅ {len(resultado['runs'])} corridas completadas"))
        self.stdout.write(f"  - Mediana: {resultado['median_csv']}")
