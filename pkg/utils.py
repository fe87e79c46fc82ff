import os
import time
import hashlib
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Sequence, TypeVar, Union
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

VERSION = "0.1.0"

T = TypeVar("T")
R = TypeVar("R")

_quiet = False


class Colors:
    HEADER = '\033[95m'
    BLUE = '\033[94m'
    CYAN = '\033[96m'
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    ENDC = '\033[0m'
    BOLD = '\033[1m'
    UNDERLINE = '\033[4m'


def set_quiet(quiet: bool) -> None:
    """
    Silence info/success messages (warnings and errors are always printed)
    """
    global _quiet
    _quiet = quiet


def print_status(message: str, level: str = "info") -> None:
    """
    Print a status message with color coding

    Args:
        message (str): Message to print
        level (str): Message level (info, success, warning, error, header)
    """
    if _quiet and level in ("info", "success", "header"):
        return

    now = time.strftime("%H:%M:%S")
    prefix = f"[{now}]"

    if level == "info":
        print(f"{Colors.BLUE}{prefix} INFO:{Colors.ENDC} {message}")
    elif level == "success":
        print(f"{Colors.GREEN}{prefix} SUCCESS:{Colors.ENDC} {message}")
    elif level == "warning":
        print(f"{Colors.YELLOW}{prefix} WARNING:{Colors.ENDC} {message}")
    elif level == "error":
        print(f"{Colors.RED}{prefix} ERROR:{Colors.ENDC} {message}")
    elif level == "header":
        print(f"\n{Colors.HEADER}{Colors.BOLD}{prefix} {message}{Colors.ENDC}")
    else:
        print(f"{prefix} {message}")


def ensure_dir(directory: Path) -> None:
    """
    Ensure a directory exists, creating it if necessary
    """
    directory.mkdir(parents=True, exist_ok=True)


def save_to_file(content: Union[str, bytes], file_path: Path) -> None:
    """
    Save content atomically: write to a temp file in the same directory, then rename

    Args:
        content (str | bytes): Content to save
        file_path (Path): Path to save the file to
    """
    ensure_dir(file_path.parent)
    data = content.encode("utf-8") if isinstance(content, str) else content
    fd, tmp_name = tempfile.mkstemp(prefix=f".{file_path.name}.", dir=file_path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, file_path)
    except Exception:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    print_status(f"Saved content to {file_path}", "success")


def read_from_file(file_path: Path) -> Optional[str]:
    """
    Read text content from a file if it exists

    Args:
        file_path (Path): Path to read from

    Returns:
        Optional[str]: File content or None if file doesn't exist
    """
    if not file_path.exists():
        return None

    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            content = f.read()
        print_status(f"Read content from {file_path}", "success")
        return content
    except Exception as e:
        print_status(f"Error reading from {file_path}: {e}", "error")
        return None


def config_hash(raw: bytes) -> str:
    """SHA-256 of the raw config bytes"""
    return hashlib.sha256(raw).hexdigest()


def default_workers() -> int:
    """
    Default worker count: TAILPROC_WORKERS if set, otherwise 1
    """
    value = os.environ.get("TAILPROC_WORKERS", "")
    try:
        workers = int(value) if value else 1
    except ValueError:
        print_status(f"Ignoring invalid TAILPROC_WORKERS={value!r}", "warning")
        workers = 1
    return max(1, workers)


def default_output_dir() -> Path:
    return Path(os.environ.get("TAILPROC_OUTPUT_DIR", "./output"))


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """
    Apply fn to every item, preserving input order regardless of worker count

    Args:
        fn (Callable): Function applied to each item
        items (Sequence): Work items
        workers (int): Number of threads (1 runs inline)

    Returns:
        List: Results in the order of items
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
