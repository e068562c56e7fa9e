# config/settings.py
"""
Django settings for the EvoEdit project.
Django se usa como contenedor de aplicación: settings, logging y management commands.
"""

import os
from pathlib import Path

import dotenv

# ==============================================================================
# 0. UTILITIES & ENV
# ==============================================================================
BASE_DIR = Path(__file__).resolve().parent.parent

# Cargar .env si existe (Local Development)
dotenv_path = BASE_DIR / '.env'
if dotenv_path.exists():
    dotenv.load_dotenv(dotenv_path)

def get_env_bool(var_name, default=False):
    """Convierte variables de entorno 'True', '1' en booleanos reales."""
    return str(os.getenv(var_name, str(default))).lower() in ('true', '1', 'yes')

# ==============================================================================
# 1. CORE
# ==============================================================================
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-local-dev-key')
DEBUG = get_env_bool('DEBUG', False)
ALLOWED_HOSTS = []

# ==============================================================================
# 2. APPS
# ==============================================================================
INSTALLED_APPS = [
    # Local Apps
    'core',
    'adapters.infrastructure.apps.InfrastructureConfig',
]

# Sin persistencia relacional: todos los artefactos son archivos.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

LANGUAGE_CODE = 'es-ec'
TIME_ZONE = 'America/Guayaquil'
USE_I18N = False
USE_TZ = True
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ==============================================================================
# 3. EVOEDIT
# ==============================================================================
EVOEDIT_OUTPUT_DIR = os.getenv('EVOEDIT_OUTPUT_DIR', str(BASE_DIR / 'runs'))
EVOEDIT_SLOW_TESTS = get_env_bool('EVOEDIT_SLOW_TESTS', False)

# Configuración completa por defecto. El YAML de una corrida se fusiona encima.
EVOEDIT_DEFAULTS = {
    'model': {
        'vocab_size': 512,
        'dim': 64,
        'n_layers': 2,
        'n_heads': 4,
        'mlp_hidden': 128,
        'max_seq_len': 256,
    },
    'tokenizer': {
        'mode': 'bpe',
        'vocab_size': 512,
    },
    'corpus': {
        'n_instances': 50,
        'path': None,
    },
    'pretrain': {
        'max_steps': 300,
        'target_loss': 0.5,
        'learning_rate': 3e-3,
    },
    'noise': {
        'alpha': 5.0,
        'resample_each_step': True,
    },
    'fusion': {
        'beta': 0.2,
        'gamma': 0.3,
        'eta': 0.5,
        'k': 20.0,
        'importance_mode': 'taylor',
        'importance_schedule': 'running_mean',
        'importance_pass': 'perturbed',
    },
    'engine': {
        'epochs_per_edit': 30,
        'lr': 3e-3,
        'optimizer': 'adam',
        'on_divergence': 'abort',
        'checkpoint_every': 10,
    },
    'eval': {
        'every': 1,
        'coeff': 0.1,
        'max_new': 32,
        'stop_text': '.',
        'checkpoints': [10, 25, 50],
    },
    'seeds': {
        'model': 0,
        'corpus': 0,
        'run': 0,
    },
}

# ==============================================================================
# 4. LOGGING & OBSERVABILITY
# ==============================================================================
EVOEDIT_LOG_LEVEL = os.getenv('EVOEDIT_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': os.getenv('DJANGO_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': EVOEDIT_LOG_LEVEL,
            'propagate': False,
        },
        'adapters': {
            'handlers': ['console'],
            'level': EVOEDIT_LOG_LEVEL,
            'propagate': False,
        },
    },
}
