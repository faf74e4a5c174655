"""User-agent simulator.

Plays the browser's role in the implicit flow: it owns the mapping from
opaque proxy handles to relying-party callbacks, forwards the
authentication request (proof included) to the identity provider, and
delivers the fragment response back to the relying party.  The provider
therefore only ever sees the agent's source address on the login path --
which is the entire point of routing the proof this way.
"""

from __future__ import annotations

import secrets
from urllib.parse import parse_qsl, urlencode, urlsplit

import requests

from .httpd import SOURCE_HEADER

DEFAULT_FRAGMENT_LIMIT = 8192


class RelayError(Exception):
    pass


class LoginFailed(Exception):
    def __init__(self, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.code = code


class UserAgent:
    def __init__(self, name: str, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT):
        self.actor = "ua:" + name
        self.fragment_limit = fragment_limit
        self._proxies: dict[str, object] = {}
        self._session = requests.Session()

    def _headers(self):
        # Only the agent's own identity travels upstream; nothing names the
        # relying party (no referrer equivalent, no callback address).
        return {SOURCE_HEADER: self.actor}

    def register_proxy(self, rp) -> str:
        """Allocate an opaque redirect handle for a relying party."""
        handle = "proxy:" + secrets.token_hex(8)
        self._proxies[handle] = rp
        return handle

    def resolve_proxy(self, handle: str):
        if handle not in self._proxies:
            raise RelayError("unknown proxy handle %r" % handle)
        return self._proxies[handle]

    def forward(self, to_url: str, params: dict, method: str = "GET"):
        """Relay fragment-style parameters to an endpoint, byte-identically,
        adding only the agent's own source identity."""
        encoded = urlencode(params)
        if len(encoded) > self.fragment_limit:
            raise RelayError(
                "payload of %d bytes exceeds the %d-byte fragment limit"
                % (len(encoded), self.fragment_limit)
            )
        try:
            if method == "GET":
                return self._session.get("%s?%s" % (to_url, encoded),
                                         headers=self._headers(),
                                         allow_redirects=False, timeout=600)
            return self._session.post(to_url, json=params, headers=self._headers(),
                                      timeout=600)
        except requests.RequestException as exc:
            raise RelayError(str(exc)) from None

    def login(self, rp, idp_url: str, username: str, password: str,
              scope, consent=None):
        """Drive one full implicit-flow login.

        Returns (subject, claims) as validated by the relying party.
        """
        handle = self.register_proxy(rp)
        auth_request = rp.initiate_login(scope, redirect_handle=handle)

        resp = self.forward(idp_url + "/login",
                            {"username": username, "password": password},
                            method="POST")
        if resp.status_code != 200:
            obj = resp.json()
            raise LoginFailed(obj.get("error", "login_failed"), obj.get("detail", ""))
        session = resp.json()["session"]

        granted = list(consent) if consent is not None else list(scope)
        resp = self.forward(idp_url + "/consent",
                            {"session": session, "granted": granted}, method="POST")
        if resp.status_code != 200:
            obj = resp.json()
            raise LoginFailed(obj.get("error", "consent_failed"), obj.get("detail", ""))

        params = dict(auth_request)
        params["session"] = session
        resp = self.forward(idp_url + "/authorize", params)
        if resp.status_code != 303:
            obj = resp.json()
            raise LoginFailed(obj.get("error", "authorize_failed"),
                              obj.get("detail", ""))
        location = resp.headers.get("Location", "")
        split = urlsplit(location)
        target = self.resolve_proxy(
            location.split("#", 1)[0] if "#" in location else split.path
        )
        fragment = dict(parse_qsl(split.fragment))
        if target is not rp:
            raise RelayError("proxy handle resolved to a different relying party")
        return rp.handle_callback(fragment)
