from enum import Enum


class Channel(Enum):
    VX = 0
    VY = 1
    VZ = 2
    AX = 3
    AY = 4
    AZ = 5


CHANNEL_NAMES = [c.name.lower() for c in Channel]
VELOCITY_CHANNELS = [Channel.VX.value, Channel.VY.value, Channel.VZ.value]
ACCELERATION_CHANNELS = [Channel.AX.value, Channel.AY.value, Channel.AZ.value]

# Channel subsets a network may be trained on
CHANNEL_SETS = {
    "all": list(range(len(Channel))),
    "velocity": VELOCITY_CHANNELS,
}
