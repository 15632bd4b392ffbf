"""
Django settings for the homlab toolkit.

The project has no web surface and no database; Django provides the settings
layer, the app registry, logging configuration, form validation, signals and
the management-command CLI.
"""

import os
from dotenv import load_dotenv
from decouple import config
from ..env import BASE_DIR, CATALOG_DIR

load_dotenv()


SECRET_KEY = os.getenv("SECRET_KEY", "homlab-offline-toolkit")

DEBUG = os.getenv("DEBUG", "False") == "True"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "geometry",
    "fem",
    "reactions",
    "cells",
    "micro",
    "macro",
    "correctors",
    "runs",
]

DATABASES = {}

USE_TZ = True


# Toolkit defaults. Every entry can be overridden with HOMLAB_<NAME>.

HOMLAB = {
    "QUALITY_FLOOR": config("HOMLAB_QUALITY_FLOOR", default=20.0, cast=float),
    "SMOOTHING_PASSES": config("HOMLAB_SMOOTHING_PASSES", default=5, cast=int),
    "CG_TOL": config("HOMLAB_CG_TOL", default=1e-10, cast=float),
    "CG_MAXITER_FACTOR": config("HOMLAB_CG_MAXITER_FACTOR", default=10, cast=int),
    "JOBS": config("HOMLAB_JOBS", default=1, cast=int),
    "OUTPUT_DIR": config("HOMLAB_OUTPUT_DIR", default="out"),
    "LIPSCHITZ_SAMPLES": config("HOMLAB_LIPSCHITZ_SAMPLES", default=1024, cast=int),
    "SOLVABILITY_WARN": config("HOMLAB_SOLVABILITY_WARN", default=1e-6, cast=float),
    "SOLVABILITY_FAIL": config("HOMLAB_SOLVABILITY_FAIL", default=1e-3, cast=float),
    "MACRO_CELLS": config("HOMLAB_MACRO_CELLS", default=128, cast=int),
    "CATALOG_DIR": CATALOG_DIR,
}


# Logging

LOG_LEVEL = os.getenv("HOMLAB_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
        for app in INSTALLED_APPS
    },
}
