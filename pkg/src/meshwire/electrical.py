"""Conductor models and per-trace electrical estimates.

Two conductor families matter here: adhesive copper tape laid into the
engraved channels (characterized by resistance per length, well under
0.5 ohm/m) and conductive printing filament (characterized by volume
resistivity in ohm*cm, around 0.6 for the good stuff).  Filament traces
are resistive enough that a design report showing per-net voltage drops
is part of the normal workflow.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ConductorSpec:
    """Electrical model of a trace conductor.

    ``kind`` is "linear" (ohm_per_m set) or "volumetric" (ohm_cm and
    cross_section_cm2 set).  Use the constructors.
    """

    kind: str
    ohm_per_m: float | None = None
    ohm_cm: float | None = None
    cross_section_cm2: float | None = None

    def __post_init__(self):
        if self.kind == "linear":
            if self.ohm_per_m is None or self.ohm_per_m <= 0:
                raise ValueError("linear spec needs positive ohm_per_m")
        elif self.kind == "volumetric":
            if (
                self.ohm_cm is None
                or self.cross_section_cm2 is None
                or self.ohm_cm <= 0
                or self.cross_section_cm2 <= 0
            ):
                raise ValueError(
                    "volumetric spec needs positive ohm_cm and cross_section_cm2"
                )
        else:
            raise ValueError(f"unknown conductor kind {self.kind!r}")

    @staticmethod
    def linear(ohm_per_m: float) -> "ConductorSpec":
        if ohm_per_m <= 0:
            raise ValueError("resistance per length must be positive")
        return ConductorSpec(kind="linear", ohm_per_m=ohm_per_m)

    @staticmethod
    def volumetric(ohm_cm: float, cross_section_cm2: float) -> "ConductorSpec":
        if ohm_cm <= 0 or cross_section_cm2 <= 0:
            raise ValueError("resistivity and cross-section must be positive")
        return ConductorSpec(
            kind="volumetric", ohm_cm=ohm_cm, cross_section_cm2=cross_section_cm2
        )

    def as_linear(self) -> "ConductorSpec":
        """Equivalent per-length representation; exact, no rounding."""
        if self.kind == "linear":
            return self
        # ohm*cm / cm^2 = ohm/cm; 100 cm per m
        return ConductorSpec.linear(self.ohm_cm / self.cross_section_cm2 * 100.0)


#: 1.5 mm copper tape: comfortably under 0.5 ohm/m end to end
COPPER_TAPE = ConductorSpec.linear(0.5)

#: conductive PLA-class filament, 0.6 ohm*cm volume resistivity, printed as
#: a 1.5 x 1.5 mm trace cross-section
CONDUCTIVE_FILAMENT = ConductorSpec.volumetric(0.6, 0.15 * 0.15)

NAMED_CONDUCTORS = {
    "copper_tape": COPPER_TAPE,
    "conductive_filament": CONDUCTIVE_FILAMENT,
}


def trace_resistance(length_m: float, spec: ConductorSpec) -> float:
    """End-to-end resistance (ohm) of a trace of the given length (m)."""
    if length_m < 0:
        raise ValueError("length must be non-negative")
    if spec.kind == "linear":
        return spec.ohm_per_m * length_m
    if spec.kind == "volumetric":
        return spec.ohm_cm * (length_m * 100.0) / spec.cross_section_cm2
    raise ValueError(f"unknown conductor kind {spec.kind!r}")


def voltage_drop(resistance_ohm: float, current_a: float) -> float:
    """Voltage drop (V) across a resistance at a given current."""
    return resistance_ohm * current_a


def equivalent_cross_section(ohm_cm: float, target_ohm_per_m: float) -> float:
    """Cross-section (cm^2) a volumetric conductor needs to match a linear
    resistance target.  For 0.6 ohm*cm against copper tape's 0.005 ohm/cm
    budget that is 120 cm^2: why filament traces cannot imitate copper."""
    if ohm_cm <= 0 or target_ohm_per_m <= 0:
        raise ValueError("resistivity and target must be positive")
    return ohm_cm / (target_ohm_per_m / 100.0)


@dataclass(frozen=True)
class ReportRow:
    net: str
    edge: int
    length_mm: float | None
    resistance_ohm: float | None
    drop_v: float | None
    routed: bool


@dataclass(frozen=True)
class DesignReport:
    rows: tuple
    current_a: float
    spec: ConductorSpec

    @property
    def failed_edges(self) -> tuple:
        return tuple(r for r in self.rows if not r.routed)

    @property
    def total_length_mm(self) -> float:
        return sum(r.length_mm for r in self.rows if r.routed)

    @property
    def worst_drop_v(self) -> float:
        drops = [r.drop_v for r in self.rows if r.routed]
        return max(drops) if drops else 0.0

    def format_text(self) -> str:
        lines = [
            f"conductor: {self.spec.kind}"
            + (
                f" {self.spec.ohm_per_m} ohm/m"
                if self.spec.kind == "linear"
                else f" {self.spec.ohm_cm} ohm*cm over {self.spec.cross_section_cm2} cm^2"
            ),
            f"current: {self.current_a * 1000:g} mA",
            f"{'net':<16} {'edge':>4} {'mm':>10} {'ohm':>10} {'drop V':>10}",
        ]
        for r in self.rows:
            if r.routed:
                lines.append(
                    f"{r.net:<16} {r.edge:>4} {r.length_mm:>10.2f}"
                    f" {r.resistance_ohm:>10.3f} {r.drop_v:>10.4f}"
                )
            else:
                lines.append(f"{r.net:<16} {r.edge:>4} {'FAILED':>10} {'-':>10} {'-':>10}")
        lines.append(
            f"total routed length: {self.total_length_mm:.2f} mm;"
            f" worst edge drop: {self.worst_drop_v:.4f} V;"
            f" unrouted edges: {len(self.failed_edges)}"
        )
        return "\n".join(lines)


def design_report(document, spec: ConductorSpec, current_a: float = 0.002) -> DesignReport:
    """Per-net-edge length, resistance, and voltage drop for a routed
    document.  Failed edges are flagged and excluded from the totals."""
    rows = []
    for (net, edge), trace in document.traces_sorted():
        if trace is not None and trace.routed:
            r = trace_resistance(trace.length / 1000.0, spec)
            rows.append(
                ReportRow(net, edge, trace.length, r, voltage_drop(r, current_a), True)
            )
        else:
            rows.append(ReportRow(net, edge, None, None, None, False))
    return DesignReport(rows=tuple(rows), current_a=current_a, spec=spec)
