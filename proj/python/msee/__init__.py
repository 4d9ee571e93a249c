from ._msee import *  # noqa: F401,F403
