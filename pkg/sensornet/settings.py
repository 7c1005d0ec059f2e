"""
Django settings for the sensornet project.

Sensornet hosts the q-digest library, the in-network aggregation simulator and
the experiment commands. Defaults mirror the published experiments and can be
overridden from the environment or a .env file.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')


def _env_list(name, default, cast):
    raw = os.getenv(name)
    if not raw:
        return tuple(default)
    return tuple(cast(item) for item in raw.split(',') if item.strip())


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SENSORNET_SECRET_KEY', 'django-insecure-sensornet-local-development-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('SENSORNET_DEBUG', 'true').lower() in ('1', 'true', 'yes')

ALLOWED_HOSTS = [host for host in os.getenv('SENSORNET_ALLOWED_HOSTS', '').split(',') if host]


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'rest_framework',
    'digests',
    'netsim',
    'datasets',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'sensornet.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'sensornet.wsgi.application'


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)
# https://docs.djangoproject.com/en/5.2/howto/static-files/

STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': (
        'rest_framework.authentication.SessionAuthentication',
    ),
    'DEFAULT_PERMISSION_CLASSES': (
        'rest_framework.permissions.AllowAny',
    ),
}


# Logging
# Results (CSV/JSON) go to stdout; diagnostics go through these loggers to stderr.

LOG_LEVEL = os.getenv('SENSORNET_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'digests': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'netsim': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'datasets': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
    },
}


# Simulation defaults
# Budgets are bytes per message; density is sensors per unit area (1000 per 1000x1000).

SENSORNET = {
    'SIGMA': int(os.getenv('SENSORNET_SIGMA', 2 ** 16)),
    'NODES': int(os.getenv('SENSORNET_NODES', 2000)),
    'BUDGETS': _env_list('SENSORNET_BUDGETS', (160, 400), int),
    'SEEDS': _env_list('SENSORNET_SEEDS', (1, 2, 3, 4, 5), int),
    'QUANTILES': _env_list('SENSORNET_QUANTILES', (0.1, 0.25, 0.5, 0.75, 0.9), float),
    'DENSITY': float(os.getenv('SENSORNET_DENSITY', 0.001)),
    'MEAN_DEGREE': float(os.getenv('SENSORNET_MEAN_DEGREE', 12)),
    'MAX_REGENERATIONS': int(os.getenv('SENSORNET_MAX_REGENERATIONS', 200)),
    'INITIAL_POWER': float(os.getenv('SENSORNET_INITIAL_POWER', 40000)),
    'COST_PER_BYTE': float(os.getenv('SENSORNET_COST_PER_BYTE', 1)),
    'HISTOGRAM_BUCKETS': int(os.getenv('SENSORNET_HISTOGRAM_BUCKETS', 32)),
    'MESSAGE_SIZES': _env_list('SENSORNET_MESSAGE_SIZES', (100, 200, 400, 800), int),
    'POWER_LEVELS': _env_list('SENSORNET_POWER_LEVELS', (0.9, 0.95, 0.99, 0.999), float),
    'GRID_FILE': Path(os.getenv('SENSORNET_GRID_FILE', BASE_DIR / 'datasets' / 'fixtures' / 'two_plateau.grid')),
}
