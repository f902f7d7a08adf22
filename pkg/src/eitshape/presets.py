"""Built-in reconstruction scenarios.

Each scenario names a ground-truth inclusion and the number of applied
currents used for it.  The concave inclusion is a digitized outline of
a nonconvex test shape; its vertices are an approximation and can be
overridden through the configuration file.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .levelset import Ellipse, Phantom, Polygon, circle

#: Digitized outline of the concave test inclusion (counterclockwise).
CONCAVE_VERTICES = np.array(
    [
        (0.323839, 0.116451),
        (0.340055, 0.115894),
        (0.477890, 0.115646),
        (0.534646, 0.115757),
        (0.558970, 0.116366),
        (0.570615, 0.117230),
        (0.583294, 0.119577),
        (0.599510, 0.124504),
        (0.802210, 0.306352),
        (0.801947, 0.313625),
        (0.615726, 0.480925),
        (0.611115, 0.488199),
        (0.611115, 0.502747),
        (0.615726, 0.510021),
        (0.664369, 0.553664),
        (0.801947, 0.677320),
        (0.802210, 0.684594),
        (0.599510, 0.866441),
        (0.583294, 0.871368),
        (0.575186, 0.873084),
        (0.570615, 0.873715),
        (0.558970, 0.874579),
        (0.542754, 0.875082),
        (0.445459, 0.875300),
        (0.356271, 0.875238),
        (0.331947, 0.874844),
        (0.315731, 0.873933),
        (0.307623, 0.872795),
        (0.299515, 0.870933),
        (0.291407, 0.868163),
        (0.287949, 0.866442),
        (0.283299, 0.863175),
        (0.279306, 0.859167),
        (0.275191, 0.853233),
        (0.272080, 0.844620),
        (0.270445, 0.837346),
        (0.269381, 0.830072),
        (0.268708, 0.822798),
        (0.268051, 0.808250),
        (0.267772, 0.670046),
        (0.267963, 0.633677),
        (0.268451, 0.619129),
        (0.269792, 0.604581),
        (0.271082, 0.597307),
        (0.273041, 0.590033),
        (0.273473, 0.582760),
        (0.273356, 0.575486),
        (0.273249, 0.437282),
        (0.273473, 0.408186),
        (0.273041, 0.400912),
        (0.271082, 0.393638),
        (0.269792, 0.386364),
        (0.268451, 0.371817),
        (0.267963, 0.357269),
        (0.267770, 0.269982),
        (0.267838, 0.197243),
        (0.268295, 0.175422),
        (0.269381, 0.160874),
        (0.270445, 0.153600),
        (0.272080, 0.146326),
        (0.274530, 0.139052),
        (0.279306, 0.131778),
        (0.283299, 0.127770),
        (0.287949, 0.124504),
        (0.291407, 0.122783),
        (0.299515, 0.120013),
        (0.307623, 0.118150),
        (0.315731, 0.117013),
    ]
)


@dataclass(frozen=True)
class Scenario:
    name: str
    phantom: Phantom
    current_count: int


SCENARIOS = {
    "two_ellipses": Scenario(
        name="two_ellipses",
        phantom=Phantom(
            (
                Ellipse(center=(0.6, 0.7), semiaxes=(0.144, 0.08)),
                Ellipse(center=(0.4, 0.3), semiaxes=(0.08, 0.144)),
            )
        ),
        current_count=3,
    ),
    "concave": Scenario(
        name="concave",
        phantom=Phantom((Polygon(CONCAVE_VERTICES),)),
        current_count=3,
    ),
    "three_inclusions": Scenario(
        name="three_inclusions",
        phantom=Phantom(
            (
                Ellipse(center=(0.6, 0.7), semiaxes=(0.144, 0.08)),
                Ellipse(center=(0.4, 0.3), semiaxes=(0.08, 0.144)),
                circle((0.2, 0.65), 0.08),
            )
        ),
        current_count=7,
    ),
}


def get_scenario(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise ConfigError(f"unknown scenario {name!r}; available presets: {known}") from None
