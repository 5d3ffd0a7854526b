# This exception exists so that we can easily catch exceptions
# at the command level where we know we can just output the
# error and abort with the matching exit code.
class ConsensusException(Exception):
    exit_code = 1


class NumericalException(ConsensusException):
    exit_code = 3
