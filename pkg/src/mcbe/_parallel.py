import os


def worker_count(requested: int | None = None) -> int:
    """Thread count: ``requested`` if given, else ``MCBE_THREADS``, else CPU count; always >= 1."""
    if requested is None:
        env = os.environ.get("MCBE_THREADS", "").strip()
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValueError(f"MCBE_THREADS must be an integer, got {env!r}") from None
        else:
            requested = os.cpu_count() or 1
    cap = os.environ.get("MCBE_THREADS", "").strip()
    if cap.isdigit() and int(cap) > 0:
        requested = min(requested, int(cap))
    return max(1, requested)
