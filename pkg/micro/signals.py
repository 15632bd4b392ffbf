from django.dispatch import Signal

# Sent after every Picard sweep with label, n, residual and ratio (None on the first sweep).
picard_step = Signal()
