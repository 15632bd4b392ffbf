from django.apps import AppConfig


class FemConfig(AppConfig):
    name = "fem"
    verbose_name = "P1 finite elements"
