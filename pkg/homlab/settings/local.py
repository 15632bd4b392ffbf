from .base import *
from dotenv import load_dotenv
from decouple import config

load_dotenv()


DEBUG = True

LOG_LEVEL = config("HOMLAB_LOG_LEVEL", default="DEBUG")

for _logger in LOGGING["loggers"].values():
    _logger["level"] = LOG_LEVEL

HOMLAB["OUTPUT_DIR"] = config("HOMLAB_OUTPUT_DIR", default="out-local")
