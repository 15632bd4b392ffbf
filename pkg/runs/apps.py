from django.apps import AppConfig


class RunsConfig(AppConfig):
    name = "runs"
    verbose_name = "Run configuration, orchestration and reports"

    def ready(self):
        import runs.signals  # noqa
