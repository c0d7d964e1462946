# perfmei/config.py
"""
Настройки HTTP-сервиса из окружения (.env), с разумными значениями по умолчанию.
CLI окружение не читает.
"""
import os
from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("PERFMEI_LOG_LEVEL", "INFO").upper()
MAX_UPLOAD_MB = float(os.getenv("PERFMEI_MAX_UPLOAD_MB", "200"))
MAX_UPLOAD_BYTES = int(MAX_UPLOAD_MB * 1024 * 1024)
# потоки анализа нот на один запрос
WORKERS = int(os.getenv("PERFMEI_WORKERS", "4"))
if WORKERS < 1:
    raise ValueError("PERFMEI_WORKERS must be a positive integer")
