class ConfigurationError(ValueError):
    pass


class ContractViolation(ValueError):
    pass


class ProtocolViolation(RuntimeError):
    pass


class MulticastDisabled(RuntimeError):
    pass


class NonQuiescenceError(RuntimeError):
    def __init__(self, message: str, phase_dump: dict[int, str]):
        lines = [message]
        for node_id in sorted(phase_dump)[:64]:
            lines.append(f"  node {node_id}: {phase_dump[node_id]}")
        if len(phase_dump) > 64:
            lines.append(f"  ... {len(phase_dump) - 64} more nodes")
        super().__init__("\n".join(lines))
        self.phase_dump = phase_dump


class VerificationFailed(RuntimeError):
    def __init__(self, report):
        super().__init__(f"Verification failed: {', '.join(report.verification.failures)}")
        self.report = report
