"""
Многоуровневая сиамская сеть для повторной идентификации людей
Библиотека и CLI: обучение, проверка градиентов, CMC-оценка
"""

__version__ = "1.0.0"
