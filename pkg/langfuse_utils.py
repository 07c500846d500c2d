# langfuse_utils.py
import logging
from datetime import datetime
from typing import Any, Dict, Optional

from langfuse import Langfuse

from config import settings

logger = logging.getLogger(__name__)

# init only if keys present
lf_client = None
if settings.langfuse_public_key and settings.langfuse_secret_key:
    try:
        lf_client = Langfuse(public_key=settings.langfuse_public_key,
                             secret_key=settings.langfuse_secret_key,
                             host=settings.langfuse_host)
        logger.info("Langfuse initialized")
    except Exception as e:
        logger.warning(f"Langfuse init error: {e}")
        lf_client = None


def send_trace_minimal(name: str, input_payload: dict, output_payload: dict,
                       metadata: dict = None) -> Optional[str]:
    """Send one trace with a single span; no-op without keys"""
    if not lf_client:
        return None
    try:
        trace = lf_client.trace(name=name, metadata=metadata or {})
        trace.span(
            name="affinity_run",
            input=input_payload,
            output=output_payload,
        )
        trace.end()
        return trace.id
    except Exception as e:
        logger.warning(f"Langfuse trace error: {e}")
        return None


def log_run_metrics(command: str, status: str, certified: bool, processing_time: float,
                    width: Optional[float] = None, words_used: int = 0,
                    checks_failed: int = 0) -> Optional[str]:
    """Log the headline numbers of one command run"""
    if not lf_client:
        return None
    try:
        trace = lf_client.trace(
            name="run_metrics",
            metadata={
                "command": command,
                "status": status,
                "certified": certified,
                "processing_time": processing_time,
                "timestamp": datetime.now().isoformat(),
            },
        )
        trace.span(
            name="run_summary",
            input={"command": command},
            output={
                "certified": certified,
                "width": width,
                "words_used": words_used,
                "checks_failed": checks_failed,
            },
        )
        trace.end()
        return trace.id
    except Exception as e:
        logger.warning(f"Langfuse metrics logging error: {e}")
        return None


def log_error(error_type: str, error_message: str,
              context: Dict[str, Any] = None) -> Optional[str]:
    if not lf_client:
        return None
    try:
        trace = lf_client.trace(
            name="run_error",
            metadata={
                "error_type": error_type,
                "error_message": error_message,
                "timestamp": datetime.now().isoformat(),
                "context": context or {},
            },
        )
        trace.span(
            name="error_details",
            input=context or {},
            output={"error_type": error_type, "error_message": error_message},
        )
        trace.end()
        return trace.id
    except Exception as e:
        logger.warning(f"Langfuse error logging error: {e}")
        return None
