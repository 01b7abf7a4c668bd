from abc import ABC, abstractmethod
from granular.netsim.context import NodeContext
from granular.netsim.dataclasses import Message


class NodeProgram(ABC):
    @abstractmethod
    def start(self, ctx: NodeContext) -> None:
        pass
    @abstractmethod
    def on_message(self, ctx: NodeContext, msg: Message) -> None:
        pass
    @property
    @abstractmethod
    def terminal(self) -> bool:
        pass
    def describe(self) -> str:
        return 'terminal' if self.terminal else 'running'
