"""From raw build log to unit vector: tail, normalize, tokenize, embed.

Two apt failures about different packages should sit close together;
a ruby version complaint should sit far from both.
"""
import numpy as np

from dockwright.embed import EmbedderConfig, embed
from dockwright.logpipe import normalize, tail_error_log, tokenize

RAW = """Step 5/9 : RUN apt-get install -y python-pip
 ---> Running in 1f2e3d4c5b6a
Reading package lists...
Building dependency tree...
E: Unable to locate package python-pip
The command '/bin/sh -c apt-get install -y python-pip' returned a non-zero code: 100
"""

tail = tail_error_log("", 3, stdout_log=RAW)
print("tail (3 lines, stdout fallback):")
print(tail)

clean = normalize(tail)
print("\nnormalized:", clean[:72], "...")

tokens = tokenize(clean)
print("tokens:", tuple(tokens)[:12], "...")

cfg = EmbedderConfig()  # 256-dim hashed character n-grams
logs = {
    "apt python-pip": "unable to locate package python pip",
    "apt curl": "unable to locate package curl",
    "ruby version": "your ruby version is 2 6 3",
}
vectors = {name: embed(text.split(), cfg) for name, text in logs.items()}
names = list(vectors)
print(f"\nall unit norm: "
      f"{all(abs(np.linalg.norm(v) - 1) < 1e-9 for v in vectors.values())}")
for i, a in enumerate(names):
    for b in names[i + 1:]:
        cos = float(np.dot(vectors[a], vectors[b]))
        print(f"cos({a!r}, {b!r}) = {cos:+.4f}")
