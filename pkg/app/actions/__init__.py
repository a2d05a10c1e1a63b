from .core import *


def setup_scenario_handlers():
    # scenario name -> (handler, config model), e.g. "two-qubit-jump" -> action_two_qubit_jump
    return discover_actions(module_name="app.actions.handlers", prefix="action_")


action_handlers = setup_scenario_handlers()
