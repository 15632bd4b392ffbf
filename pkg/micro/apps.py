from django.apps import AppConfig


class MicroConfig(AppConfig):
    name = "micro"
    verbose_name = "Microscopic Picard solver"
