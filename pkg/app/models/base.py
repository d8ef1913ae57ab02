from pydantic import BaseModel, ConfigDict


''' Базовая модель предметной области: неизменяемая, без лишних полей '''
class DomainModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')
