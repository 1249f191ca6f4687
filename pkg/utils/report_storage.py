import os
import json
import logging
from datetime import datetime

from config import REPORTS_DIR

logger = logging.getLogger(__name__)


class DateTimeEncoder(json.JSONEncoder):
    """JSON encoder for datetime objects and values with a text form."""
    def default(self, obj):
        if isinstance(obj, datetime):
            return obj.strftime("%Y-%m-%d %H:%M:%S")
        if hasattr(obj, "as_dict"):
            return obj.as_dict()
        return str(obj)


def dumps_report(report):
    """Deterministic JSON text: sorted keys and a fixed indent."""
    return json.dumps(report, indent=2, sort_keys=True, cls=DateTimeEncoder) + "\n"


def save_report(report, path=None, name="report"):
    """Save a report to a JSON file.

    Timing data and the save time go under the ``timing`` key, so everything
    else is byte-identical across reruns of the same command.

    Args:
        report (dict): The report to save
        path (str): Target file; defaults to a timestamped file under REPORTS_DIR
        name (str): File name stem for the default path

    Returns:
        str: Path to the saved file
    """
    if path is None:
        os.makedirs(REPORTS_DIR, exist_ok=True)
        path = os.path.join(REPORTS_DIR, f"{name}_{datetime.now().strftime('%Y%m%d%H%M%S')}.json")
    else:
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
    stamped = {**report, "timing": {**report.get("timing", {}), "saved_at": datetime.now()}}
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_report(stamped))
    logger.debug("report written to %s", path)
    return path


def load_report(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def load_saved_reports(folder=REPORTS_DIR):
    """Load every JSON report in a folder, skipping unreadable files.

    Returns:
        list: Report dictionaries in file-name order
    """
    reports = []
    if not os.path.exists(folder):
        return reports
    for file_name in sorted(os.listdir(folder)):
        if file_name.endswith(".json"):
            file_path = os.path.join(folder, file_name)
            try:
                reports.append(load_report(file_path))
            except (OSError, json.JSONDecodeError) as e:
                logger.warning("Error loading report file %s: %s", file_name, e)
    return reports


def strip_timing(report):
    """Copy of a report without its timing fields, for reproducibility checks."""
    if isinstance(report, dict):
        return {k: strip_timing(v) for k, v in report.items() if k != "timing"}
    if isinstance(report, list):
        return [strip_timing(v) for v in report]
    return report
