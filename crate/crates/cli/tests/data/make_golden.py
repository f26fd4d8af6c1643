"""Brute-force reference for the toy fixture: markcorr curve with
--rmax 30 --nr 7 --bandwidth 8. Run from this directory."""
import csv

segs = {}
for r in csv.DictReader(open("network.csv")):
    segs[r["seg_id"]] = ((float(r["x1"]), float(r["y1"])), (float(r["x2"]), float(r["y2"])))
pts = [(r["point_id"], r["seg_id"], float(r["offset"])) for r in csv.DictReader(open("pattern.csv"))]
rows = list(csv.reader(open("marks.csv")))
marks = {r[0]: [float(v) for v in r[1:]] for r in rows[1:]}
times = [float(h[2:]) for h in rows[0][1:]]

# graph with network nodes and points as vertices
verts = {}
def vid(key):
    return verts.setdefault(key, len(verts))
edges = []
for sid, (u, v) in segs.items():
    length = ((u[0] - v[0]) ** 2 + (u[1] - v[1]) ** 2) ** 0.5
    chain = [(0.0, vid(u)), (length, vid(v))]
    chain += [(off, vid(pid)) for pid, s, off in pts if s == sid]
    chain.sort()
    for (o1, a), (o2, b) in zip(chain, chain[1:]):
        edges.append((a, b, o2 - o1))
n = len(verts)
D = [[0.0 if i == j else float("inf") for j in range(n)] for i in range(n)]
for a, b, w in edges:
    D[a][b] = D[b][a] = min(D[a][b], w)
for m in range(n):
    for a in range(n):
        for b in range(n):
            D[a][b] = min(D[a][b], D[a][m] + D[m][b])

ids = [p[0] for p in pts]
N = len(ids)
d = [[D[verts[i]][verts[j]] for j in ids] for i in ids]
h = [marks[i] for i in ids]
bw, rmax, nr = 8.0, 30.0, 7
rs = [rmax * k / (nr - 1) for k in range(nr)]

def K(x, r):
    u = (x - r) / bw
    return 0.75 / bw * (1 - u * u) if abs(u) <= 1 else 0.0

out = ["stat,r,value,masked"]
for r in rs:
    wsum = sum(K(d[i][j], r) for i in range(N) for j in range(N) if i != j)
    if wsum <= 0:
        out.append(f"markcorr,{r!r},1.0,true")
        continue
    surface = []
    for t in range(len(times)):
        num = sum(K(d[i][j], r) * h[i][t] * h[j][t] for i in range(N) for j in range(N) if i != j)
        den = sum(h[i][t] * h[j][t] for i in range(N) for j in range(N) if i != j) / N ** 2
        surface.append(num / wsum / den)
    integral = sum(0.5 * (times[k + 1] - times[k]) * (surface[k] + surface[k + 1]) for k in range(len(times) - 1))
    out.append(f"markcorr,{r!r},{integral / (times[-1] - times[0])!r},false")
open("golden_markcorr_curve.csv", "w").write("\n".join(out) + "\n")
