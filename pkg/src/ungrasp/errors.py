"""Exception types shared across the package."""


class UngraspError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGripperError(UngraspError, ValueError):
    """Gripper parameters fall outside the supported model."""


class NoGoalError(UngraspError, ValueError):
    """No goal configuration exists for the requested parameters."""


class ConfigurationInfeasibleError(UngraspError, ValueError):
    """The three contacts cannot be realized at the requested configuration."""


class OutOfRangeError(ConfigurationInfeasibleError):
    """A configuration coordinate lies outside its admissible interval."""


class BPastThumbTipError(ConfigurationInfeasibleError):
    """Contact B would leave the thumb past its tip."""


class InvalidModesError(UngraspError, ValueError):
    """A contact mode assignment that no primitive can produce."""


class SteeringStuck(UngraspError):
    """No primitive step from the nearest node is feasible."""


class InvalidStartError(UngraspError, ValueError):
    """The start configuration is insecure, colliding or not a pinch grasp."""


class TrajectoryInfeasibleError(UngraspError, ValueError):
    """A command stream would violate a gripper limit."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PushDownRefused(UngraspError, ValueError):
    """Preconditions of the push-down maneuver are not met."""


class SceneError(UngraspError, ValueError):
    """A scene file is malformed or fails validation."""
