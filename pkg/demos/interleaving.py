"""Print where consecutive cache blocks land under each address layout."""
from memsim.dram import DramConfig, Interleaving, map_address


def show(kind, k=4):
    cfg = DramConfig(interleaving=Interleaving(kind, k))
    print(f"{kind}" + (f"({k})" if kind == "sub_row" else ""))
    for addr in (0x0, 0x40, 0x80, 0xC0, 0x100, 0x2000, 0x10000):
        f = map_address(addr, cfg)
        print(f"  {addr:#8x} -> bank {f.bank} row {f.row} col {f.column}")


if __name__ == "__main__":
    for kind in ("row", "cache_block", "sub_row"):
        show(kind)
