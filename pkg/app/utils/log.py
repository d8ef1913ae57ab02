import logging


LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s %(message)s'


def setup_logging(log_file: str = None, level: str = None) -> None:
    """ Настройка логирования в файл (повторный вызов ничего не меняет) """
    from app.config import settings

    root_logger = logging.getLogger()
    if any(isinstance(h, logging.FileHandler) for h in root_logger.handlers):
        return

    logging.basicConfig(handlers=[logging.FileHandler(log_file or settings.LOG_FILE, encoding='utf-8')],
                        level=getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.DEBUG),
                        format=LOG_FORMAT)
