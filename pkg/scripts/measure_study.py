"""Initial z-momentum spread under the three measure conventions, at the packet centre and at the throat."""
from catenoid_mqm.catenoid import SystemParams
from catenoid_mqm.initial_states import packet_from_paper_defaults, select_measure


def main():
    packet, _ = packet_from_paper_defaults()
    best, rows = select_measure(packet, SystemParams())
    print(f"{'measure':8s} {'centre':>6s} {'G0020':>12s} {'rel':>9s} {'G0002':>18s} {'rel':>9s}")
    for r in rows:
        print(f"{r['measure']:8s} {r['z0']:6.2f} {r['G0020']:12.8f} {r['G0020_rel_residual']:9.1e} "
              f"{r['G0002']:18.15f} {r['G0002_rel_residual']:9.1e}")
    print(f"selected: {best['measure']} centred at z={best['z0']:g}")


if __name__ == "__main__":
    main()
