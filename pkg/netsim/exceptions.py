# netsim/exceptions.py


class SimulationError(Exception):
    """Base class for simulator failures."""


class ConfigError(SimulationError, ValueError):
    """A run configuration that cannot be simulated."""


class TopologyError(SimulationError, ValueError):
    """Bad placement parameters, or no connected placement within the regeneration limit."""


class DisconnectedTopologyError(SimulationError):

    def __init__(self, node):
        self.node = node
        super().__init__(f'node {node} cannot reach the base station')
