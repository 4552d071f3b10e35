# common/exceptions.py
"""
Hierarquia de erros da biblioteca de simulação.

Os serviços (CLI / runner) capturam ``SimulationError`` para transformar uma
replicação que falhou em uma linha rejeitada, sem derrubar o experimento.
"""


class SimulationError(Exception): pass


class KernelValidationError(SimulationError, ValueError): pass


class ConvergenceError(SimulationError): pass


class GraphError(SimulationError, ValueError): pass


class ProcessExtinctError(SimulationError):
    """Não foi possível obter uma trajetória sobrevivente dentro do limite de tentativas."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class NoCollisionError(SimulationError): pass


class InsufficientSampleError(SimulationError, ValueError): pass


class DistributionParameterError(SimulationError, ValueError): pass


class ConfigurationError(SimulationError, ValueError): pass
