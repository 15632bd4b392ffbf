from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Shipped run configurations (benchmark, laminate, nonlinear, ...).
CATALOG_DIR = BASE_DIR / "catalog"
