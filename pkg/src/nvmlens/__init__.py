"""nvmlens: performance analysis, prediction and placement for DRAM/NVM memory."""

__version__ = "0.1.0"

from .errors import NvmLensError  # noqa: E402
from .trace_io import CounterTrace, Mode, account_traffic, parse_trace, write_trace  # noqa: E402

__all__ = [
    "__version__",
    "NvmLensError",
    "CounterTrace",
    "Mode",
    "account_traffic",
    "parse_trace",
    "write_trace",
]
