''' Лаборатория резонансов Рюэля–Поллико для модельных потоков Аносова '''
__version__ = '0.1.0'
