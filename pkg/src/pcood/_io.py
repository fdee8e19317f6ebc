"""Small stream helpers shared by the parsers and writers."""

from __future__ import annotations

import contextlib
import os
import tempfile


def iter_decoded_lines(stream):
    """Yield lines from a text or binary stream with newlines stripped."""
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def write_text(sink, text: str) -> None:
    """Write a string to either a text or a binary sink."""
    try:
        sink.write(text)
    except TypeError:
        sink.write(text.encode("utf-8"))


@contextlib.contextmanager
def atomic_outputs(paths):
    """Open one temp file per target path and rename all on success.

    Targets are replaced only after every writer ran to completion, so a
    failed run leaves the previous outputs untouched and no partial files
    behind. Yields binary file objects in the order of ``paths``.
    """
    tmp_paths = []
    files = []
    # mkstemp creates 0600 files; renamed outputs should honor the umask
    # like any ordinary file creation would.
    umask = os.umask(0)
    os.umask(umask)
    try:
        for path in paths:
            target_dir = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(
                prefix=os.path.basename(path) + ".", dir=target_dir
            )
            os.fchmod(fd, 0o666 & ~umask)
            tmp_paths.append(tmp)
            files.append(os.fdopen(fd, "wb"))
        yield files
        for f in files:
            f.close()
        for tmp, path in zip(tmp_paths, paths):
            os.replace(tmp, path)
    finally:
        for f in files:
            if not f.closed:
                f.close()
        for tmp in tmp_paths:
            if os.path.exists(tmp):
                os.unlink(tmp)
