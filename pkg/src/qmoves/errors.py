"""Exception taxonomy shared across the package.

DomainError   -- invalid inputs or configuration (CLI exit code 2)
NumericError  -- solver failures or under-resolved numerics (CLI exit code 3)
ContractError -- API misuse: violated preconditions between components
ResourceError -- memory/size budgets exceeded
"""


class QmovesError(Exception):
    pass


class DomainError(QmovesError, ValueError):
    pass


class NumericError(QmovesError, RuntimeError):
    pass


class ContractError(QmovesError, ValueError):
    pass


class ResourceError(QmovesError, RuntimeError):
    pass
