"""Regenerate the bundled mini URL corpus (src/phishdual/data/mini_urls.csv).

The corpus is synthetic but follows the public malicious-URL dump it stands
in for: its class mix (about 66% benign, 15% defacement, 14% phishing, 5%
malware), mostly scheme-less benign URLs spread over many domains with long
descriptive paths, brand lookalikes on cheap TLDs, raw-IP malware drops and
CMS-style defaced pages that always carry ``http://``.

    python scripts/make_mini_url_corpus.py [--n 2000] [--seed 2024]
"""

import argparse
import csv
import string
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "phishdual" / "data" / "mini_urls.csv"

SITES = [
    "google.com", "youtube.com", "facebook.com", "en.wikipedia.org", "amazon.com", "github.com",
    "stackoverflow.com", "reddit.com", "nytimes.com", "bbc.co.uk", "linkedin.com", "microsoft.com",
    "apple.com", "paypal.com", "netflix.com", "imdb.com", "espn.com", "cnn.com", "ebay.com",
    "yahoo.com", "bankofamerica.com", "chase.com", "wellsfargo.com", "mit.edu", "stanford.edu",
    "python.org", "mozilla.org", "adobe.com", "dropbox.com", "twitter.com", "instagram.com",
    "theguardian.com", "washingtonpost.com", "forbes.com", "medium.com", "quora.com", "yelp.com",
    "tripadvisor.com", "booking.com", "spotify.com", "twitch.tv", "walmart.com", "target.com",
    "bestbuy.com", "nih.gov", "cdc.gov", "irs.gov", "weather.com", "usatoday.com", "hsbc.co.uk",
    "barclays.co.uk", "citibank.com", "etsy.com", "pinterest.com", "tumblr.com", "wordpress.org",
]
WORDS = [
    "history", "music", "science", "travel", "garden", "recipe", "football", "python", "review",
    "guide", "news", "world", "health", "market", "energy", "design", "school", "family", "photo",
    "video", "career", "movie", "space", "climate", "history", "coffee", "library", "museum",
    "budget", "housing", "election", "software", "fitness", "weekend", "festival", "startup",
    "review", "wildlife", "painting", "cooking", "cycling", "finance", "chemistry", "poetry",
]
BRANDS = [
    "paypal", "apple", "amazon", "microsoft", "netflix", "chase", "wellsfargo", "benbank", "citibank",
    "barclays", "hsbc", "dropbox", "office365", "outlook", "docusign", "dhl", "fedex", "usps",
    "instagram", "facebook", "bankofamerica", "americanexpress", "coinbase", "binance",
]
LURES = ["verify", "secure", "login", "account", "update", "signin", "support", "confirm",
         "billing", "unlock", "recovery", "service", "alert", "auth", "webscr", "validate"]
BAD_TLDS = ["xyz", "ru", "tk", "top", "info", "online", "ml", "ga", "cf", "club", "site", "live",
            "com", "net", "cn", "buzz", "icu"]
FREE_HOSTS = ["000webhostapp.com", "weebly.com", "firebaseapp.com", "wixsite.com", "blogspot.com",
              "herokuapp.com", "sites.google.com", "github.io", "netlify.app"]
SMALL_BIZ = ["greenvalley", "smithlaw", "bluelake", "sunrise", "oakridge", "riverside", "hilltop",
             "northstar", "maplewood", "goldcoast", "lakeside", "pinecrest", "westfield"]
BIZ_KIND = ["farm", "dental", "motors", "bakery", "church", "hotel", "school", "studio", "clinic",
            "realty", "club", "travel", "design"]
CC_TLDS = ["com", "net", "org", "de", "it", "br", "nl", "com.au", "co.za", "pl", "fr", "es", "gr"]


def lookalike(brand, rng):
    swaps = {"a": "4", "o": "0", "l": "1", "i": "1", "e": "3", "s": "5"}
    chars = list(brand)
    spots = [i for i, c in enumerate(chars) if c in swaps]
    if spots and rng.random() < 0.6:
        i = spots[rng.integers(len(spots))]
        chars[i] = swaps[chars[i]]
    elif len(chars) > 4 and rng.random() < 0.5:
        i = rng.integers(1, len(chars) - 1)
        chars[i], chars[i + 1] = chars[i + 1], chars[i]
    return "".join(chars)


def token(rng, n, alphabet=string.ascii_lowercase + string.digits):
    return "".join(alphabet[i] for i in rng.integers(len(alphabet), size=n))


def pick(rng, seq):
    return seq[rng.integers(len(seq))]


def maybe_scheme(rng, p_https=0.3, p_http=0.15):
    r = rng.random()
    if r < p_https:
        return "https://"
    if r < p_https + p_http:
        return "http://"
    return ""


def random_site(rng):
    name = pick(rng, WORDS) + pick(rng, WORDS + SMALL_BIZ + BIZ_KIND)
    if rng.random() < 0.3:
        name = f"{pick(rng, WORDS)}-{pick(rng, BIZ_KIND)}"
    return f"{name}.{pick(rng, CC_TLDS + ['com', 'com', 'org', 'net', 'ca', 'co.uk'])}"


def benign_url(rng):
    site = pick(rng, SITES) if rng.random() < 0.4 else random_site(rng)
    kind = rng.integers(9)
    w1, w2, w3 = pick(rng, WORDS), pick(rng, WORDS), pick(rng, WORDS)
    if kind == 0:
        path = f"/wiki/{w1.capitalize()}_{w2}"
        site = "en.wikipedia.org"
    elif kind == 1:
        path = f"/questions/{rng.integers(10**6, 10**8)}/how-to-{w1}-{w2}-in-{w3}"
        site = "stackoverflow.com"
    elif kind == 2:
        path = f"/{w1}{rng.integers(100)}/{w2}-{w3}"
        site = "github.com"
    elif kind == 3:
        path = f"/watch?v={token(rng, 11, string.ascii_letters + string.digits + '-_')}"
        site = "youtube.com"
    elif kind == 4:
        path = f"/{rng.integers(2005, 2024)}/{rng.integers(1, 13):02d}/{rng.integers(1, 29):02d}/{w1}-{w2}-{w3}.html"
    elif kind == 5:
        path = f"/{w1}/{w2}-{rng.integers(10**6, 10**8)}"
    elif kind == 6:
        # Legitimate sign-in pages carry the same lure words phishers use.
        path = pick(rng, ["/signin", "/login", "/account/settings", "/myaccount", "/secure/login",
                          "/accounts/login?next=/", "/help/verify-your-account"])
        site = pick(rng, ["accounts.google.com", "www.paypal.com", "login.microsoftonline.com",
                          "secure.chase.com", "www.amazon.com", "appleid.apple.com", "www.netflix.com"])
    elif kind == 7:
        site = f"{pick(rng, SMALL_BIZ)}{pick(rng, BIZ_KIND)}.{pick(rng, CC_TLDS)}"
        path = pick(rng, ["", "/", f"/{w1}", f"/{w1}/{w2}.html", "/contact-us", "/about"])
    else:
        path = f"/search?q={w1}+{w2}"
    host = site if rng.random() < 0.8 or site.count(".") > 1 else "www." + site
    return maybe_scheme(rng, 0.03, 0.03) + host + path


def phishing_url(rng):
    brand = pick(rng, BRANDS)
    lure = pick(rng, LURES)
    tld = pick(rng, BAD_TLDS)
    kind = rng.integers(7)
    if kind == 0:
        host = f"{lure}-{lookalike(brand, rng)}.{tld}"
    elif kind == 1:
        host = f"{brand}.com.{lure}-{token(rng, 5)}.{tld}"
    elif kind == 2:
        host = ".".join(str(v) for v in rng.integers(1, 255, size=4))
    elif kind == 3:
        host = f"{token(rng, 8)}.{pick(rng, FREE_HOSTS)}"
    elif kind == 4:
        host = f"www.{lookalike(brand, rng)}-{lure}.{tld}"
    elif kind == 5:
        host = f"{pick(rng, SMALL_BIZ)}{pick(rng, BIZ_KIND)}.{pick(rng, CC_TLDS)}"  # compromised site
    else:
        host = f"{lure}.{brand}{rng.integers(10, 999)}.{tld}"
    path = pick(rng, [
        f"/{brand}/{lure}.php",
        f"/{lure}/index.html",
        f"/webscr?cmd=_{lure}&session={token(rng, 16, '0123456789abcdef')}",
        f"/{lure}/{brand}/{token(rng, 10)}",
        f"/wp-content/{lure}/{brand}/login.php",
        f"/{lure}?id={token(rng, 12)}",
        "",
    ])
    return maybe_scheme(rng, 0.15, 0.25) + host + path


def malware_url(rng):
    kind = rng.integers(4)
    if kind == 0:
        ip = ".".join(str(v) for v in rng.integers(1, 255, size=4))
        port = pick(rng, [":80", ":8080", ":443", ":81", ""])
        return f"http://{ip}{port}/{pick(rng, ['bins', 'i', 'mozi', 'x86', 'arm7'])}/{pick(rng, ['mips', 'x86', 'arm', 'sh', 'm', 'a'])}"
    if kind == 1:
        return f"{token(rng, rng.integers(6, 14))}.{pick(rng, BAD_TLDS)}/{pick(rng, ['load', 'gate', 'panel', 'dl'])}.php?id={token(rng, 8)}"
    if kind == 2:
        name = pick(rng, ["flashplayer", "update", "invoice", "setup", "chrome_update", "document", "scan"])
        return f"http://{pick(rng, ['download', 'cdn', 'files', 'update'])}-{token(rng, 5)}.{pick(rng, BAD_TLDS)}/{name}.{pick(rng, ['exe', 'apk', 'zip', 'scr', 'jar'])}"
    return f"{pick(rng, SMALL_BIZ)}{pick(rng, BIZ_KIND)}.{pick(rng, CC_TLDS)}/{pick(rng, ['wp-includes', 'images', 'tmp', 'css'])}/{token(rng, 6)}.{pick(rng, ['exe', 'doc', 'js'])}"


def defacement_url(rng):
    site = f"http://{maybe_www(rng)}{pick(rng, SMALL_BIZ)}{pick(rng, BIZ_KIND)}.{pick(rng, CC_TLDS)}"
    kind = rng.integers(3)
    if kind == 0:
        return f"{site}/index.php?option=com_content&view=article&id={rng.integers(1, 400)}&itemid={rng.integers(1, 200)}"
    if kind == 1:
        return f"{site}/index.php/{pick(rng, WORDS)}/{rng.integers(1, 90)}-{pick(rng, WORDS)}"
    return f"{site}/index.php?option=com_{pick(rng, ['k2', 'user', 'mailto', 'contact'])}&view={pick(rng, ['item', 'login', 'form'])}&id={rng.integers(1, 999)}"


def maybe_www(rng):
    return "www." if rng.random() < 0.6 else ""


def generate(n, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        r = rng.random()
        if r < 0.657:
            url, kind = benign_url(rng), "benign"
        elif r < 0.805:
            url, kind = defacement_url(rng), "defacement"
        elif r < 0.950:
            url, kind = phishing_url(rng), "phishing"
        else:
            url, kind = malware_url(rng), "malware"
        rows.append((url, kind))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    rows = generate(args.n, args.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("url", "type"))
        w.writerows(rows)
    print(f"wrote {len(rows)} urls to {args.out}")


if __name__ == "__main__":
    main()
