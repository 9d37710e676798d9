"""Small string and filesystem helpers."""
import re
import shutil


def canonicalize_name(name):
    """Normalize a distribution name for comparisons."""
    return re.sub(r"[-_.]+", "-", name).lower()


def module_name(name):
    """Python module name for a project name."""
    return canonicalize_name(name).replace("-", "_")


def remove_directory(path):
    shutil.rmtree(path, ignore_errors=True)
