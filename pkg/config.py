import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    """Simple settings class using environment variables directly"""

    def __init__(self):
        # Application Configuration
        self.app_name = os.getenv("APP_NAME", "Affinity_Spectrum")
        self.log_level = os.getenv("LOG_LEVEL", "INFO")

        # Computation defaults
        self.threads = max(1, int(os.getenv("AFFINITY_THREADS", "1")))
        self.default_budget = int(os.getenv("AFFINITY_BUDGET", "10000000"))
        self.default_tolerance = float(os.getenv("AFFINITY_TOLERANCE", "1e-3"))

        # Langfuse Configuration (optional run tracing)
        self.langfuse_public_key = os.getenv("LF_PUBLIC_KEY", "")
        self.langfuse_secret_key = os.getenv("LF_SECRET_KEY", "")
        self.langfuse_host = os.getenv("LF_HOST", "https://api.langfuse.com")

settings = Settings()
