# core/management/commands/_evo_base.py
import logging

from django.core.management.base import BaseCommand, CommandError

from adapters.infrastructure.repositories.csv_reporte_repository import CsvReporteRepository
from adapters.infrastructure.repositories.json_tokenizer_repository import JsonTokenizerRepository
from adapters.infrastructure.repositories.jsonl_corpus_repository import JsonlCorpusRepository
from adapters.infrastructure.repositories.npz_checkpoint_repository import NpzCheckpointRepository
from adapters.infrastructure.services.run_config_service import YamlRunConfigService
from core.shared.exceptions import BaseExcepcionDeNegocio, codigo_salida_para

logger = logging.getLogger(__name__)


class EvoBaseCommand(BaseCommand):
    """
    Base de los comandos evo_*: arma los repositorios de archivos y traduce
    las excepciones de negocio a códigos de salida.

    Códigos: 0 éxito, 1 error inesperado, 2 uso (argparse), 3 configuración,
    4 datos o artefacto inexistente, 5 divergencia.
    """

    def add_config_argument(self, parser):
        parser.add_argument('--config', default=None, help='Archivo YAML de la corrida (opcional).')

    def cargar_config(self, options):
        return YamlRunConfigService().cargar(options.get('config'))

    # --- Composition root ---
    def repos(self):
        return {
            'checkpoint_repo': NpzCheckpointRepository(),
            'corpus_repo': JsonlCorpusRepository(),
            'tokenizer_repo': JsonTokenizerRepository(),
            'reporte_repo': CsvReporteRepository(),
        }

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except BaseExcepcionDeNegocio as e:
            codigo = codigo_salida_para(e)
            logger.error(f"{type(e).__name__}: {e}")
            self.stderr.write(self.style.ERROR(f"❌ {e}"))
            raise CommandError(str(e), returncode=codigo) from e
        except CommandError:
            raise
        except Exception as e:
            logger.exception("Error inesperado")
            raise CommandError(f"Error inesperado: {e}", returncode=1) from e
