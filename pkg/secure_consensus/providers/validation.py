from secure_consensus.consensus_exception import ConsensusException


class ValidationException(ConsensusException):
    exit_code = 1
