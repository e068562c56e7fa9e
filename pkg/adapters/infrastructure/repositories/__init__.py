# adapters/infrastructure/repositories/__init__.py
from .npz_checkpoint_repository import NpzCheckpointRepository as CheckpointRepository
from .jsonl_corpus_repository import JsonlCorpusRepository as CorpusRepository
from .json_tokenizer_repository import JsonTokenizerRepository as TokenizerRepository
from .csv_reporte_repository import CsvReporteRepository as ReporteRepository
