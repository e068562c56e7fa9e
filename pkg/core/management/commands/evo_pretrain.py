# core/management/commands/evo_pretrain.py
import os

from django.conf import settings

from core.management.commands._evo_base import EvoBaseCommand
from core.use_cases.dtos import PretrainDTO
from core.use_cases.pretrain_uc import PretrainUseCase


class Command(EvoBaseCommand):
    help = 'Preentrena el modelo base sobre los hechos verdaderos del corpus y escribe checkpoint + manifest'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument(
            '--output-dir', default=os.path.join(settings.EVOEDIT_OUTPUT_DIR, 'base'),
            help='Directorio de salida (corpus.jsonl, tokenizer.json, base.npz, manifest.json).',
        )
        parser.add_argument('--corpus', default=None, help='Corpus JSONL propio en lugar del sintético.')

    def run(self, **options):
        cfg = self.cargar_config(options)
        self.stdout.write("🧠 Preentrenando modelo base...")
        resultado = PretrainUseCase(**self.repos()).ejecutar(
            cfg, PretrainDTO(output_dir=options['output_dir'], corpus_path=options['corpus'])
        )
        self.stdout.write(self.style.SUCCESS("✅ Preentrenamiento completado"))
        self.stdout.write(f"  - Pasos: {resultado['steps']}")
        self.stdout.write(f"  - Pérdida: {resultado['initial_loss']:.4f} -> {resultado['final_loss']:.4f}")
        self.stdout.write(f"  - Checkpoint: {resultado['checkpoint']} ({resultado['checkpoint_hash'][:12]})")
