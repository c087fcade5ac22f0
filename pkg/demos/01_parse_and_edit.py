"""Walk a Dockerfile's instruction list, then splice in two edits.

The parser keeps byte offsets for every instruction, so edits are plain
span replacements and the untouched bytes survive verbatim.
"""
from dockwright.dockerfile import SourceSpan, parse, serialize, splice

SOURCE = """\
# build image for the api
FROM ubuntu:latest
RUN apt-get update && \\
    apt-get install -y python-pip
COPY . /app
WORKDIR /app
CMD ["python", "serve.py"]
"""

ast = parse(SOURCE)
print("instructions:")
for ins in ast.instructions:
    print(f"  {ins.kind:<8} [{ins.span.start:>3}:{ins.span.end:>3}]  {ins.args_raw!r}")

# round trip is byte exact, comments and continuations included
assert serialize(ast) == SOURCE
print("\nround trip ok:", len(SOURCE), "bytes")

# retag the base image and append a second stage marker
from_ins = ast.instructions[1]
tag = SOURCE.index(":latest", from_ins.span.start)
patched = splice(
    ast,
    [
        (SourceSpan(tag, tag + len(":latest")), ":18.04"),
        (SourceSpan(from_ins.span.end, from_ins.span.end),
         "\nARG DEBIAN_FRONTEND=noninteractive"),
    ],
)
print("\npatched:")
print(patched)
