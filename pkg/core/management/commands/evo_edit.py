# core/management/commands/evo_edit.py
import os

from django.conf import settings

from core.management.commands._evo_base import EvoBaseCommand
from core.shared.enums import MetodoEdicion
from core.use_cases.dtos import EditarStreamDTO
from core.use_cases.editar_stream_uc import EditarStreamUseCase


def agregar_artefactos_base(parser):
    parser.add_argument(
        '--base-dir', default=os.path.join(settings.EVOEDIT_OUTPUT_DIR, 'base'),
        help='Salida de evo_pretrain; provee base.npz, tokenizer.json y corpus.jsonl por defecto.',
    )
    parser.add_argument('--checkpoint', default=None)
    parser.add_argument('--tokenizer', default=None)
    parser.add_argument('--corpus', default=None)
    parser.add_argument(
        '--method', default=MetodoEdicion.EVOEDIT.value, choices=[m.value for m in MetodoEdicion],
    )
    parser.add_argument('--limit', type=int, default=None, help='Usar solo las primeras N instancias.')


def rutas_artefactos(options):
    base = options['base_dir']
    return (
        options['checkpoint'] or os.path.join(base, 'base.npz'),
        options['tokenizer'] or os.path.join(base, 'tokenizer.json'),
        options['corpus'] or os.path.join(base, 'corpus.jsonl'),
    )


class Command(EvoBaseCommand):
    help = 'Ejecuta un flujo de ediciones continuas con el método o la ablación elegida'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        agregar_artefactos_base(parser)
        parser.add_argument('--run-dir', required=True, help='Directorio de la corrida.')
        parser.add_argument('--disable-lpa', action='store_true')
        parser.add_argument('--disable-kpf', action='store_true')
        parser.add_argument('--resume', action='store_true', help='Reanudar desde state/ del run-dir.')

    def run(self, **options):
        cfg = self.cargar_config(options)
        checkpoint, tokenizer, corpus = rutas_artefactos(options)
        metodo = MetodoEdicion(options['method'])
        self.stdout.write(f"✏️  Edición continua ({metodo.value}) -> {options['run_dir']}")

        resultado = EditarStreamUseCase(**self.repos()).ejecutar(cfg, EditarStreamDTO(
            run_dir=options['run_dir'],
            checkpoint_path=checkpoint,
            tokenizer_path=tokenizer,
            corpus_path=corpus,
            method=metodo,
            disable_lpa=options['disable_lpa'],
            disable_kpf=options['disable_kpf'],
            resume=options['resume'],
            limit=options['limit'],
        ))

        self.stdout.write(self.style.SUCCESS(f"✅ {resultado.pasos} ediciones aplicadas"))
        for modo in ('efficacy', 'specificity'):
            bloque = resultado.summary.get(modo)
            if bloque:
                self.stdout.write(
                    f"  - {modo}: BLEU {bloque['bleu_average']:.4f} | PPL {bloque['ppl_average']:.4f}"
                )
        self.stdout.write(f"  - Manifest: {resultado.manifest_hash[:12]}")
