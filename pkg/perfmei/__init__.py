# perfmei/__init__.py
"""Кодирование вокальных исполнений в MEI с покадровыми аудиодескрипторами."""
