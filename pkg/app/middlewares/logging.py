"""
Middleware логирования команд
"""
import argparse
import time
from typing import Callable, Optional

from loguru import logger

from app.exceptions import ReidError

Handler = Callable[[argparse.Namespace], Optional[int]]


class LoggingMiddleware:
    """
    Обёртка обработчика команды: журнал запуска, время выполнения,
    ошибки превращаются в код выхода 1
    """

    def __call__(self, handler: Handler, args: argparse.Namespace) -> int:
        start_time = time.time()
        logger.info(f"📩 Команда {args.command}")

        try:
            result = handler(args)

            elapsed = (time.time() - start_time) * 1000
            logger.debug(f"⏱️ Команда {args.command} выполнена за {elapsed:.2f}ms")

            return 0 if result is None else int(result)

        except KeyboardInterrupt:
            logger.warning("🛑 Прервано пользователем")
            return 130

        except ReidError as e:
            elapsed = (time.time() - start_time) * 1000
            logger.error(f"❌ {args.command}: {e} ({elapsed:.2f}ms)")
            return 1

        except Exception as e:
            elapsed = (time.time() - start_time) * 1000
            logger.error(f"❌ Ошибка команды {args.command} после {elapsed:.2f}ms: {e}")
            logger.opt(exception=e).debug("Трассировка")
            return 1
