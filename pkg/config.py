from dotenv import load_dotenv
import os

load_dotenv()

DEFAULT_CONFIG_PATH = os.getenv("BDIRS_CONFIG", "configs/system.yaml")
ABSORPTION_TABLE_PATH = os.getenv("BDIRS_ABSORPTION_TABLE")
LOG_LEVEL = os.getenv("BDIRS_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("BDIRS_LOG_FILE")
WORKERS = int(os.getenv("BDIRS_WORKERS", "1"))
