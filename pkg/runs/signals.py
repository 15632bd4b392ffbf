import logging

from django.dispatch import receiver

from micro.signals import picard_step

logger = logging.getLogger(__name__)


@receiver(picard_step)
def log_picard_step(sender, label, n, residual, ratio, **kwargs):
    ratio_text = f"{ratio:.4f}" if ratio is not None else "-"
    logger.debug(f"[{sender}] {label}: sweep {n}, residual {residual:.3e}, ratio {ratio_text}")
