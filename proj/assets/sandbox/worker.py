import builtins
import io
import json
import linecache
import math
import os
import sys
import time
import traceback

SOLUTION_FILE = "<solution>"


def _open_protocol():
    proto = os.fdopen(os.dup(1), "w", encoding="utf-8")
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.close(devnull)
    return proto


class _Capture(io.TextIOBase):
    def __init__(self, cap, mirror):
        self._parts = []
        self._size = 0
        self._cap = cap
        self._mirror = mirror
        self.truncated = False

    def writable(self):
        return True

    def write(self, text):
        if not isinstance(text, str):
            raise TypeError("write() argument must be str, not " + type(text).__name__)
        if self._size < self._cap:
            room = self._cap - self._size
            piece = text[:room]
            self._parts.append(piece)
            self._size += len(piece)
            if self._mirror is not None:
                try:
                    self._mirror.write(piece)
                    self._mirror.flush()
                except OSError:
                    self._mirror = None
            if len(text) > room:
                self.truncated = True
        elif text:
            self.truncated = True
        return len(text)

    def flush(self):
        if self._mirror is not None:
            try:
                self._mirror.flush()
            except OSError:
                self._mirror = None

    def getvalue(self):
        text = "".join(self._parts)
        if self.truncated:
            text += "\n[output truncated]"
        return text


def _inside(path, root):
    try:
        if isinstance(path, int):
            return True
        full = os.path.realpath(os.path.join(os.getcwd(), os.fsdecode(path)))
    except (TypeError, ValueError, OSError):
        return False
    return full == root or full.startswith(root + os.sep)


_WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND
_PATH_EVENTS = {
    "os.remove": (0,),
    "os.rmdir": (0,),
    "os.rename": (0, 1),
    "os.link": (0, 1),
    "os.symlink": (1,),
    "os.mkdir": (0,),
    "os.chmod": (0,),
    "os.chown": (0,),
    "os.truncate": (0,),
    "os.utime": (0,),
    "shutil.rmtree": (0,),
    "shutil.move": (0, 1),
    "shutil.copyfile": (1,),
    "shutil.copytree": (1,),
}
_PROCESS_EVENTS = {
    "subprocess.Popen",
    "os.system",
    "os.exec",
    "os.posix_spawn",
    "os.spawn",
    "os.fork",
    "os.forkpty",
    "os.kill",
    "os.killpg",
    "pty.spawn",
}


def _install_guard(scratch):
    root = os.path.realpath(scratch)

    def hook(event, args):
        if event.startswith("socket."):
            raise PermissionError("network access is disabled in the sandbox")
        if event in _PROCESS_EVENTS:
            raise PermissionError("process creation is disabled in the sandbox")
        if event == "open":
            path, mode, flags = args
            writes = (isinstance(mode, str) and any(c in mode for c in "wax+")) or (
                isinstance(flags, int) and flags & _WRITE_FLAGS
            )
            if writes and path is not None and not _inside(path, root):
                raise PermissionError("writes outside the scratch directory are denied: %r" % (path,))
            return
        positions = _PATH_EVENTS.get(event)
        if positions is not None:
            for i in positions:
                if i < len(args) and not _inside(args[i], root):
                    raise PermissionError("%s outside the scratch directory is denied" % event)

    sys.addaudithook(hook)


def _exception_text(exc):
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if f.filename != "<string>"]
    lines = ["Traceback (most recent call last):\n"] if frames else []
    lines.extend(traceback.format_list(frames))
    lines.extend(traceback.format_exception_only(type(exc), exc))
    return "".join(lines)


def _to_tree(value, depth=0):
    if depth > 200:
        raise TypeError("return value nests too deeply")
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise TypeError("return value contains a non-finite float")
        return value
    if isinstance(value, (list, tuple)):
        return [_to_tree(v, depth + 1) for v in value]
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, (str, int, float, bool)) and k is not None:
                raise TypeError("dict key of type %s" % type(k).__name__)
            out[k if isinstance(k, str) else json.dumps(k)] = _to_tree(v, depth + 1)
        return out
    item = getattr(value, "item", None)
    if callable(item) and type(value).__module__ == "numpy":
        return _to_tree(item(), depth + 1)
    tolist = getattr(value, "tolist", None)
    if callable(tolist) and type(value).__module__ == "numpy":
        return _to_tree(tolist(), depth + 1)
    raise TypeError("type %s" % type(value).__name__)


def main():
    proto = _open_protocol()
    request = json.loads(sys.stdin.read())
    sys.stdin = io.StringIO("")
    try:
        mirror = os.fdopen(3, "w", encoding="utf-8", errors="replace")
    except OSError:
        mirror = None
    capture = _Capture(request["stdout_cap"], mirror)

    result = {"status": "ok", "return": None, "stdout": "", "exc": "", "duration": 0.0}

    def finish():
        capture.flush()
        result["stdout"] = capture.getvalue()
        proto.write(json.dumps(result, ensure_ascii=False, allow_nan=False))
        proto.flush()

    source = request["source"]
    entry = request["entry"]
    linecache.cache[SOLUTION_FILE] = (len(source), None, source.splitlines(True), SOLUTION_FILE)
    while "" in sys.path:
        sys.path.remove("")

    try:
        code = compile(source, SOLUTION_FILE, "exec")
    except (SyntaxError, ValueError) as exc:
        result["status"] = "harness_error"
        result["exc"] = "program does not compile: " + "".join(
            traceback.format_exception_only(type(exc), exc)
        )
        finish()
        return

    _install_guard(request["scratch"])
    sys.stdout = capture
    namespace = {"__name__": "__solution__", "__builtins__": builtins}
    started = time.perf_counter()
    value = None
    try:
        exec(code, namespace)
        fn = namespace.get(entry)
        if not callable(fn):
            result["status"] = "harness_error"
            result["exc"] = "entry function '%s' is not defined" % entry
        elif request["bind_symbols"]:
            value = fn(request["symbols"])
        else:
            value = fn()
    except MemoryError:
        result["status"] = "resource_exhausted"
        result["exc"] = "memory limit exceeded"
    except BaseException as exc:
        result["status"] = "exception"
        result["exc"] = _exception_text(exc)
    finally:
        sys.stdout = sys.__stdout__
    result["duration"] = time.perf_counter() - started

    if result["status"] == "ok":
        try:
            result["return"] = _to_tree(value)
        except TypeError as exc:
            result["status"] = "harness_error"
            result["exc"] = (
                "return value is not JSON-serializable (%s); return a str, int, float, bool "
                "or None" % exc
            )
    finish()


main()
