"""Split a raw message into a text stream and a URL stream.

MIME structure, quoted-printable and base64 are handled by the stdlib
:mod:`email` package; this module owns part selection, HTML flattening, URL
lexing and the warnings that make :func:`parse_email` total.
"""

from __future__ import annotations

import email
import email.header
import email.policy
import html
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

_SEPARATOR = re.compile(rb"\r?\n\r?\n")
_HEADER_LINE = re.compile(rb"^[!-9;-~]+:")
_UNFOLD = re.compile(r"\r?\n(?=[ \t])")

_URL = re.compile(r"(?<![\w@.\-/])(?:https?://|www\.)[^\s<>\"]*", re.IGNORECASE)
_TRAILING = ".,;:!?)]}'\""
_BARE_PREFIXES = ("http://", "https://", "www")

_BLOCK_TAGS = {"p", "br", "div", "tr", "li", "ul", "ol", "table", "h1", "h2", "h3", "h4", "h5", "h6"}
_SKIP_TAGS = {"script", "style", "head", "title"}


@dataclass(frozen=True)
class ParsedEmail:
    headers: tuple[tuple[str, str], ...]
    body_text: str
    urls: tuple[str, ...]
    warnings: tuple[str, ...] = field(default=())

    def header(self, name, default=None):
        """First value of header ``name`` (case-insensitive)."""
        name = name.lower()
        for key, value in self.headers:
            if key.lower() == name:
                return value
        return default

    def header_all(self, name):
        name = name.lower()
        return [v for k, v in self.headers if k.lower() == name]


def extract_urls(text: str) -> list[str]:
    """Lex ``http://``, ``https://`` and ``www.`` tokens out of free text.

    A token runs until whitespace or one of ``< > "``; trailing sentence
    punctuation is trimmed.  Order and duplicates are preserved.
    """
    urls = []
    for match in _URL.finditer(text):
        token = match.group(0).rstrip(_TRAILING)
        if token.lower() in _BARE_PREFIXES or token.lower().rstrip(".") in _BARE_PREFIXES:
            continue
        urls.append(token)
    return urls


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip = max(0, self._skip - 1)
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if not self._skip:
            self.parts.append(data)


def strip_html(markup: str) -> str:
    """Drop tags, script/style content and decode character references."""
    parser = _TextExtractor()
    parser.feed(markup)
    parser.close()
    text = "".join(parser.parts)
    text = re.sub(r"[ \t\r\f\v]+", " ", text)
    text = re.sub(r" *\n[\n ]*", "\n", text)
    return text.strip()


def _decode_header_value(value):
    value = _UNFOLD.sub("", value)
    if "=?" not in value:
        return value
    try:
        return str(email.header.make_header(email.header.decode_header(value)))
    except (ValueError, LookupError, UnicodeError):
        return value


def _decode_bytes(data, charset, warnings):
    charset = charset or "utf-8"
    try:
        text = data.decode(charset, errors="strict")
    except LookupError:
        warnings.append(f"unknown charset {charset!r}; decoded as utf-8")
        text = data.decode("utf-8", errors="replace")
    except UnicodeDecodeError:
        warnings.append(f"undecodable bytes in {charset} body replaced")
        text = data.decode(charset, errors="replace")
    return text


def _looks_like_headers(head):
    first = head.split(b"\n", 1)[0]
    return bool(_HEADER_LINE.match(first))


def _select_part(message):
    """First text/plain leaf depth-first, else first text/html leaf."""
    plain = html_part = None
    for part in message.walk():
        if part.is_multipart():
            continue
        disposition = (part.get("Content-Disposition") or "").lower()
        if disposition.startswith("attachment"):
            continue
        ctype = part.get_content_type()
        if ctype == "text/plain" and plain is None:
            plain = part
        elif ctype == "text/html" and html_part is None:
            html_part = part
    return plain if plain is not None else html_part


def parse_email(raw: bytes | str) -> ParsedEmail:
    """Parse a message (or a bare text file) into headers, body text and URLs.

    Never raises for malformed input; problems are reported in ``warnings``.
    Text is not lowercased here.
    """
    if isinstance(raw, str):
        raw = raw.encode("utf-8", errors="surrogatepass")
    warnings = []

    sep = _SEPARATOR.search(raw)
    if sep is None or not _looks_like_headers(raw[: sep.start()]):
        if sep is None and raw.strip():
            warnings.append("missing header/body separator; whole input treated as body")
        body = _decode_bytes(raw, "utf-8", warnings)
        return ParsedEmail((), body, tuple(extract_urls(body)), tuple(warnings))

    message = email.message_from_bytes(raw, policy=email.policy.compat32)
    headers = tuple((name, _decode_header_value(str(value))) for name, value in message.items())
    for defect in message.defects:
        warnings.append(f"message defect: {type(defect).__name__}")

    part = _select_part(message)
    if part is None:
        return ParsedEmail(headers, "", (), tuple(warnings))

    payload = part.get_payload(decode=True)
    if payload is None:
        payload = b""
    for defect in part.defects:
        if part is not message:
            warnings.append(f"part defect: {type(defect).__name__}")
    charset = part.get_content_charset()
    decoded = _decode_bytes(payload, charset, warnings)

    if part.get_content_type() == "text/html":
        body = strip_html(decoded)
        urls = extract_urls(html.unescape(decoded))
    else:
        body = decoded
        urls = extract_urls(body)
    return ParsedEmail(headers, body, tuple(urls), tuple(warnings))


def parse_email_file(path) -> ParsedEmail:
    with open(path, "rb") as fh:
        return parse_email(fh.read())
