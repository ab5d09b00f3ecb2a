"""
Django settings for pte_workbench project.

The workbench has no HTTP surface; everything runs through manage.py
commands, so only the pieces those commands need are configured here.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'PTE_SECRET_KEY',
    'django-insecure-pte-workbench-development-key-change-me',
)

DEBUG = os.environ.get('PTE_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'games',
    'kripke',
    'verification',
]


# Database
# https://docs.djangoproject.com/en/5.1/ref/settings/#databases
# 只有 `verify --record` 会写入数据库

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# 日志输出到 stderr，stdout 上的命令输出保持可复现

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.environ.get('PTE_LOG_LEVEL', 'WARNING'),
    },
}


# 工作台配置

# build_canonical(max_level=AUTO) 在淘汰不动点层之上多保留的层数
PTE_AUTO_LEVEL_MARGIN = 2

# `verify` 未指定 --shape 时使用的形状
PTE_SWEEP_SHAPES = ['2x2', '2x3', '3x3', '2x2x2']

# 对称博弈（Hofstadter）批量验证的策略数
PTE_SYMMETRIC_SIZES = [2, 3, 4]
PTE_SYMMETRIC_RETRIES = 100

# `verify` 的进程池大小；1 表示在当前进程中运行
PTE_SWEEP_WORKERS = int(os.environ.get('PTE_SWEEP_WORKERS', '1'))

# 博弈 sha1 摘要保留的十六进制位数
PTE_DIGEST_LENGTH = 12
