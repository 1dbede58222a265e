"""Built-in through-hole part definitions.

Everything here sits on the 2.54 mm (0.1 inch) pin grid.  Offsets are
part-local mm, x to the right and y up, anchor at the body center.
"""

from .schematic import Footprint, PartDef, PinDef

_FP17 = 1.7  # default drill for ~0.6 mm leads with clearance


def _two_pin(name, a="1", b="2", roles=("io", "io")) -> PartDef:
    return PartDef(
        name,
        (PinDef(a, roles[0]), PinDef(b, roles[1])),
        Footprint(((-1.27, 0.0), (1.27, 0.0)), _FP17),
    )


def _dip(name, n) -> PartDef:
    # Two columns 7.62 mm apart.  Pin 1 top-left, counting down the left
    # column then up the right, the way the chips are numbered.
    half = n // 2
    offsets = []
    top = (half - 1) * 2.54 / 2.0
    for i in range(half):
        offsets.append((-3.81, top - i * 2.54))
    for i in range(half):
        offsets.append((3.81, top - (half - 1 - i) * 2.54))
    pins = tuple(PinDef(str(i + 1)) for i in range(n))
    return PartDef(name, pins, Footprint(tuple(offsets), _FP17))


resistor = _two_pin("resistor")
capacitor = _two_pin("capacitor")
led = _two_pin("led", "anode", "cathode")
diode = _two_pin("diode", "anode", "cathode")

to92 = PartDef(
    "to92",
    (PinDef("1"), PinDef("2"), PinDef("3")),
    Footprint(((-2.54, 0.0), (0.0, 0.0), (2.54, 0.0)), _FP17),
)

dip8 = _dip("dip8", 8)
dip16 = _dip("dip16", 16)

battery_clip = PartDef(
    "battery_clip",
    (PinDef("+", "power"), PinDef("-", "power")),
    Footprint(((-5.08, 0.0), (5.08, 0.0)), _FP17),
)

PART_LIBRARY = {
    p.name: p
    for p in (resistor, capacitor, led, diode, to92, dip8, dip16, battery_clip)
}
