from confoundverse.config import settings
