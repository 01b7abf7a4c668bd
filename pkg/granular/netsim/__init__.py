from granular.netsim.context import NodeContext, NodeStats, Trace
from granular.netsim.costs import ComputeKind, CostModel
from granular.netsim.dataclasses import Message, PhaseTag
from granular.netsim.engine import Simulator
from granular.netsim.programs.base import NodeProgram
from granular.netsim.settings import NetsimSettings
from granular.netsim.topology import LatencyModel, Topology, path_delay
__all__ = [
    'ComputeKind',
    'CostModel',
    'LatencyModel',
    'Message',
    'NetsimSettings',
    'NodeContext',
    'NodeProgram',
    'NodeStats',
    'PhaseTag',
    'Simulator',
    'Topology',
    'Trace',
    'path_delay',
]
