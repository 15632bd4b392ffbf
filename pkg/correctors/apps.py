from django.apps import AppConfig


class CorrectorsConfig(AppConfig):
    name = "correctors"
    verbose_name = "Two-scale reconstruction and convergence rates"
