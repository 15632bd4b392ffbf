from .base import *
from dotenv import load_dotenv
import os

load_dotenv()


DEBUG = os.getenv("DEBUG", "False") == "True"

# Sweeps on a workstation: one worker per epsilon unless told otherwise.
HOMLAB["JOBS"] = int(os.getenv("HOMLAB_JOBS", "4"))
