"""Maximum-weight general matching (Edmonds' blossom, primal-dual, O(n^3)).

A numba port of the classic array-based formulation by J. van Rantwijk,
with recursion replaced by explicit stacks.  Weights must be integers so
that all dual variables stay integral and optimality is exact.

Endpoints: edge ``k = (i, j)`` has endpoints ``2k`` (vertex ``i``) and
``2k + 1`` (vertex ``j``).  ``mate[v]`` holds the remote endpoint during the
run and the partner vertex at the end.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _wrap(j, n):
    return j + n if j < 0 else j


@njit(cache=True)
def _leaves(b, nv, childs, nchilds, out, stack):
    if b < nv:
        out[0] = b
        return 1
    cnt = 0
    sp = 1
    stack[0] = b
    while sp > 0:
        sp -= 1
        x = stack[sp]
        for i in range(nchilds[x] - 1, -1, -1):
            t = childs[x, i]
            if t < nv:
                out[cnt] = t
                cnt += 1
            else:
                stack[sp] = t
                sp += 1
    return cnt


@njit(cache=True)
def _slack(k, ei, ej, ew, dual):
    return dual[ei[k]] + dual[ej[k]] - 2 * ew[k]


@njit(cache=True)
def _assign_label(w, t, p, S):
    (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
     childs, nchilds, endps, queue, qlen, buf, stack) = S
    while True:
        b = inblossom[w]
        label[w] = t
        label[b] = t
        labelend[w] = p
        labelend[b] = p
        bestedge[w] = -1
        bestedge[b] = -1
        if t == 1:
            cnt = _leaves(b, nv, childs, nchilds, buf, stack)
            for i in range(cnt):
                if qlen[0] >= queue.shape[0]:
                    raise RuntimeError("blossom queue overflow")
                queue[qlen[0]] = buf[i]
                qlen[0] += 1
            return
        mb = mate[bbase[b]]
        w = endpoint[mb]
        t = 1
        p = mb ^ 1


@njit(cache=True)
def _scan_blossom(v, w, S, path):
    (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
     childs, nchilds, endps, queue, qlen, buf, stack) = S
    npath = 0
    base = -1
    while v != -1 or w != -1:
        b = inblossom[v]
        if label[b] & 4:
            base = bbase[b]
            break
        path[npath] = b
        npath += 1
        label[b] = 5
        if labelend[b] == -1:
            v = -1
        else:
            v = endpoint[labelend[b]]
            b = inblossom[v]
            v = endpoint[labelend[b]]
        if w != -1:
            v, w = w, v
    for i in range(npath):
        label[path[i]] = 1
    return base


@njit(cache=True)
def _add_blossom(base, k, S, unused, nunused, nb_ptr, nb_end, bbe, nbbe, tmpc, tmpe, bestedgeto, buf2, stack2):
    (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
     childs, nchilds, endps, queue, qlen, buf, stack) = S
    v = ei[k]
    w = ej[k]
    bb = inblossom[base]
    bv = inblossom[v]
    bw = inblossom[w]
    nunused[0] -= 1
    b = unused[nunused[0]]
    bbase[b] = base
    bparent[b] = -1
    bparent[bb] = b
    n1 = 0
    while bv != bb:
        bparent[bv] = b
        tmpc[n1] = bv
        tmpe[n1] = labelend[bv]
        n1 += 1
        v = endpoint[labelend[bv]]
        bv = inblossom[v]
    L = 0
    childs[b, L] = bb
    L += 1
    for i in range(n1 - 1, -1, -1):
        childs[b, L] = tmpc[i]
        L += 1
    E = 0
    for i in range(n1 - 1, -1, -1):
        endps[b, E] = tmpe[i]
        E += 1
    endps[b, E] = 2 * k
    E += 1
    while bw != bb:
        bparent[bw] = b
        childs[b, L] = bw
        L += 1
        endps[b, E] = labelend[bw] ^ 1
        E += 1
        w = endpoint[labelend[bw]]
        bw = inblossom[w]
    nchilds[b] = L
    label[b] = 1
    labelend[b] = labelend[bb]
    dual[b] = 0
    cnt = _leaves(b, nv, childs, nchilds, buf, stack)
    for i in range(cnt):
        x = buf[i]
        if label[inblossom[x]] == 2:
            if qlen[0] >= queue.shape[0]:
                raise RuntimeError("blossom queue overflow")
            queue[qlen[0]] = x
            qlen[0] += 1
        inblossom[x] = b
    bestedgeto[:] = -1
    for ci in range(L):
        bv = childs[b, ci]
        if nbbe[bv] == -1:
            c2 = _leaves(bv, nv, childs, nchilds, buf2, stack2)
            for li in range(c2):
                x = buf2[li]
                for q in range(nb_ptr[x], nb_ptr[x + 1]):
                    k2 = nb_end[q] // 2
                    i2 = ei[k2]
                    j2 = ej[k2]
                    if inblossom[j2] == b:
                        i2, j2 = j2, i2
                    bj = inblossom[j2]
                    if bj != b and label[bj] == 1:
                        if bestedgeto[bj] == -1 or _slack(k2, ei, ej, ew, dual) < _slack(bestedgeto[bj], ei, ej, ew, dual):
                            bestedgeto[bj] = k2
        else:
            for q in range(nbbe[bv]):
                k2 = bbe[bv, q]
                i2 = ei[k2]
                j2 = ej[k2]
                if inblossom[j2] == b:
                    i2, j2 = j2, i2
                bj = inblossom[j2]
                if bj != b and label[bj] == 1:
                    if bestedgeto[bj] == -1 or _slack(k2, ei, ej, ew, dual) < _slack(bestedgeto[bj], ei, ej, ew, dual):
                        bestedgeto[bj] = k2
        nbbe[bv] = -1
        bestedge[bv] = -1
    c = 0
    for x in range(bestedgeto.shape[0]):
        if bestedgeto[x] != -1:
            bbe[b, c] = bestedgeto[x]
            c += 1
    nbbe[b] = c
    bestedge[b] = -1
    for q in range(c):
        k2 = bbe[b, q]
        if bestedge[b] == -1 or _slack(k2, ei, ej, ew, dual) < _slack(bestedge[b], ei, ej, ew, dual):
            bestedge[b] = k2


@njit(cache=True)
def _recycle(b, S, unused, nunused, nbbe):
    label = S[6]
    labelend = S[7]
    bbase = S[10]
    bestedge = S[11]
    nchilds = S[14]
    label[b] = -1
    labelend[b] = -1
    nchilds[b] = 0
    bbase[b] = -1
    nbbe[b] = -1
    bestedge[b] = -1
    unused[nunused[0]] = b
    nunused[0] += 1


@njit(cache=True)
def _expand_blossom(b, endstage, S, unused, nunused, nbbe, allowedge, estack):
    (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
     childs, nchilds, endps, queue, qlen, buf, stack) = S
    if endstage:
        sp = 1
        estack[0] = b
        while sp > 0:
            sp -= 1
            x = estack[sp]
            for ci in range(nchilds[x]):
                s = childs[x, ci]
                bparent[s] = -1
                if s < nv:
                    inblossom[s] = s
                elif dual[s] == 0:
                    estack[sp] = s
                    sp += 1
                else:
                    cnt = _leaves(s, nv, childs, nchilds, buf, stack)
                    for i in range(cnt):
                        inblossom[buf[i]] = s
            _recycle(x, S, unused, nunused, nbbe)
        return

    for ci in range(nchilds[b]):
        s = childs[b, ci]
        bparent[s] = -1
        if s < nv:
            inblossom[s] = s
        else:
            cnt = _leaves(s, nv, childs, nchilds, buf, stack)
            for i in range(cnt):
                inblossom[buf[i]] = s
    if label[b] == 2:
        L = nchilds[b]
        entrychild = inblossom[endpoint[labelend[b] ^ 1]]
        j = 0
        for ci in range(L):
            if childs[b, ci] == entrychild:
                j = ci
                break
        if j & 1:
            j -= L
            jstep = 1
            et = 0
        else:
            jstep = -1
            et = 1
        p = labelend[b]
        while j != 0:
            label[endpoint[p ^ 1]] = 0
            label[endpoint[endps[b, _wrap(j - et, L)] ^ et ^ 1]] = 0
            _assign_label(endpoint[p ^ 1], 2, p, S)
            allowedge[endps[b, _wrap(j - et, L)] // 2] = True
            j += jstep
            p = endps[b, _wrap(j - et, L)] ^ et
            allowedge[p // 2] = True
            j += jstep
        bv = childs[b, _wrap(j, L)]
        label[endpoint[p ^ 1]] = 2
        label[bv] = 2
        labelend[endpoint[p ^ 1]] = p
        labelend[bv] = p
        bestedge[bv] = -1
        j += jstep
        while childs[b, _wrap(j, L)] != entrychild:
            bv = childs[b, _wrap(j, L)]
            if label[bv] == 1:
                j += jstep
                continue
            cnt = _leaves(bv, nv, childs, nchilds, buf, stack)
            found = -1
            for i in range(cnt):
                if label[buf[i]] != 0:
                    found = buf[i]
                    break
            if found >= 0:
                v = found
                label[v] = 0
                label[endpoint[mate[bbase[bv]]]] = 0
                _assign_label(v, 2, labelend[v], S)
            j += jstep
    _recycle(b, S, unused, nunused, nbbe)


@njit(cache=True)
def _augment_blossom(b0, v0, S, frames, tmpc, tmpe):
    (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
     childs, nchilds, endps, queue, qlen, buf, stack) = S
    # frame columns: b, v, phase, t, i, j, jstep, endptrick, p
    fsp = 1
    frames[0, 0] = b0
    frames[0, 1] = v0
    frames[0, 2] = 0
    while fsp > 0:
        f = fsp - 1
        b = frames[f, 0]
        ph = frames[f, 2]
        L = nchilds[b]
        if ph == 0:
            t = frames[f, 1]
            while bparent[t] != b:
                t = bparent[t]
            frames[f, 3] = t
            frames[f, 2] = 1
            if t >= nv:
                frames[fsp, 0] = t
                frames[fsp, 1] = frames[f, 1]
                frames[fsp, 2] = 0
                fsp += 1
        elif ph == 1:
            t = frames[f, 3]
            i = 0
            for ci in range(L):
                if childs[b, ci] == t:
                    i = ci
                    break
            j = i
            if i & 1:
                j -= L
                frames[f, 6] = 1
                frames[f, 7] = 0
            else:
                frames[f, 6] = -1
                frames[f, 7] = 1
            frames[f, 4] = i
            frames[f, 5] = j
            frames[f, 2] = 2
        elif ph == 2:
            j = frames[f, 5]
            if j == 0:
                frames[f, 2] = 5
                continue
            et = frames[f, 7]
            j += frames[f, 6]
            t = childs[b, _wrap(j, L)]
            p = endps[b, _wrap(j - et, L)] ^ et
            frames[f, 5] = j
            frames[f, 8] = p
            frames[f, 2] = 3
            if t >= nv:
                frames[fsp, 0] = t
                frames[fsp, 1] = endpoint[p]
                frames[fsp, 2] = 0
                fsp += 1
        elif ph == 3:
            j = frames[f, 5] + frames[f, 6]
            frames[f, 5] = j
            t = childs[b, _wrap(j, L)]
            frames[f, 2] = 4
            if t >= nv:
                frames[fsp, 0] = t
                frames[fsp, 1] = endpoint[frames[f, 8] ^ 1]
                frames[fsp, 2] = 0
                fsp += 1
        elif ph == 4:
            p = frames[f, 8]
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
            frames[f, 2] = 2
        else:
            i = frames[f, 4]
            for ci in range(L):
                tmpc[ci] = childs[b, (ci + i) % L]
                tmpe[ci] = endps[b, (ci + i) % L]
            for ci in range(L):
                childs[b, ci] = tmpc[ci]
                endps[b, ci] = tmpe[ci]
            bbase[b] = bbase[childs[b, 0]]
            fsp -= 1


@njit(cache=True)
def _augment_matching(k, S, frames, tmpc, tmpe):
    (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
     childs, nchilds, endps, queue, qlen, buf, stack) = S
    for side in range(2):
        if side == 0:
            s = ei[k]
            p = 2 * k + 1
        else:
            s = ej[k]
            p = 2 * k
        while True:
            bs = inblossom[s]
            if bs >= nv:
                _augment_blossom(bs, s, S, frames, tmpc, tmpe)
            mate[s] = p
            if labelend[bs] == -1:
                break
            t = endpoint[labelend[bs]]
            bt = inblossom[t]
            s = endpoint[labelend[bt]]
            j = endpoint[labelend[bt] ^ 1]
            if bt >= nv:
                _augment_blossom(bt, j, S, frames, tmpc, tmpe)
            mate[j] = labelend[bt]
            p = labelend[bt] ^ 1


@njit(cache=True)
def max_weight_matching_arrays(nv, ei, ej, ew, maxcardinality):
    """Core solver; ``ei, ej, ew`` are int64 arrays.  Returns ``mate`` (-1 = single)."""
    nedge = ei.shape[0]
    mate = np.full(nv, -1, dtype=np.int64)
    if nedge == 0 or nv == 0:
        return mate
    maxweight = 0
    for k in range(nedge):
        if ew[k] > maxweight:
            maxweight = ew[k]
    endpoint = np.empty(2 * nedge, dtype=np.int64)
    deg = np.zeros(nv + 1, dtype=np.int64)
    for k in range(nedge):
        endpoint[2 * k] = ei[k]
        endpoint[2 * k + 1] = ej[k]
        deg[ei[k] + 1] += 1
        deg[ej[k] + 1] += 1
    nb_ptr = np.cumsum(deg)
    fill = nb_ptr[:-1].copy()
    nb_end = np.empty(2 * nedge, dtype=np.int64)
    for k in range(nedge):
        nb_end[fill[ei[k]]] = 2 * k + 1
        fill[ei[k]] += 1
        nb_end[fill[ej[k]]] = 2 * k
        fill[ej[k]] += 1

    n2 = 2 * nv
    label = np.zeros(n2, dtype=np.int64)
    labelend = np.full(n2, -1, dtype=np.int64)
    inblossom = np.arange(nv, dtype=np.int64)
    bparent = np.full(n2, -1, dtype=np.int64)
    bbase = np.full(n2, -1, dtype=np.int64)
    bbase[:nv] = np.arange(nv)
    bestedge = np.full(n2, -1, dtype=np.int64)
    dual = np.zeros(n2, dtype=np.int64)
    dual[:nv] = maxweight
    childs = np.empty((n2, nv + 1), dtype=np.int64)
    endps = np.empty((n2, nv + 1), dtype=np.int64)
    nchilds = np.zeros(n2, dtype=np.int64)
    bbe = np.empty((n2, n2), dtype=np.int64)
    nbbe = np.full(n2, -1, dtype=np.int64)
    unused = np.empty(nv, dtype=np.int64)
    for i in range(nv):
        unused[i] = n2 - 1 - i  # pop order nv, nv+1, ...
    nunused = np.array([nv], dtype=np.int64)
    allowedge = np.zeros(nedge, dtype=np.bool_)
    queue = np.empty(nv * nv + 4 * nv + 16, dtype=np.int64)
    qlen = np.zeros(1, dtype=np.int64)
    buf = np.empty(nv + 1, dtype=np.int64)
    stack = np.empty(n2 + 1, dtype=np.int64)
    buf2 = np.empty(nv + 1, dtype=np.int64)
    stack2 = np.empty(n2 + 1, dtype=np.int64)
    estack = np.empty(n2 + 1, dtype=np.int64)
    path = np.empty(n2 + 1, dtype=np.int64)
    tmpc = np.empty(nv + 1, dtype=np.int64)
    tmpe = np.empty(nv + 1, dtype=np.int64)
    bestedgeto = np.empty(n2, dtype=np.int64)
    frames = np.zeros((nv + 2, 9), dtype=np.int64)
    S = (nv, ei, ej, ew, endpoint, mate, label, labelend, inblossom, bparent, bbase, bestedge, dual,
         childs, nchilds, endps, queue, qlen, buf, stack)

    for _stage in range(nv):
        label[:] = 0
        bestedge[:] = -1
        nbbe[nv:] = -1
        allowedge[:] = False
        qlen[0] = 0
        for v in range(nv):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                _assign_label(v, 1, -1, S)
        augmented = False
        while True:
            while qlen[0] > 0 and not augmented:
                qlen[0] -= 1
                v = queue[qlen[0]]
                for q in range(nb_ptr[v], nb_ptr[v + 1]):
                    p = nb_end[q]
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = 0
                    if not allowedge[k]:
                        kslack = _slack(k, ei, ej, ew, dual)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            _assign_label(w, 2, p ^ 1, S)
                        elif label[inblossom[w]] == 1:
                            base = _scan_blossom(v, w, S, path)
                            if base >= 0:
                                _add_blossom(base, k, S, unused, nunused, nb_ptr, nb_end, bbe, nbbe,
                                             tmpc, tmpe, bestedgeto, buf2, stack2)
                            else:
                                _augment_matching(k, S, frames, tmpc, tmpe)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < _slack(bestedge[b], ei, ej, ew, dual):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < _slack(bestedge[w], ei, ej, ew, dual):
                            bestedge[w] = k
            if augmented:
                break
            deltatype = -1
            delta = 0
            deltaedge = -1
            deltablossom = -1
            if not maxcardinality:
                deltatype = 1
                delta = dual[0]
                for v in range(nv):
                    if dual[v] < delta:
                        delta = dual[v]
            for v in range(nv):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = _slack(bestedge[v], ei, ej, ew, dual)
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(n2):
                if bparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    d = _slack(bestedge[b], ei, ej, ew, dual) // 2
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(nv, n2):
                if bbase[b] >= 0 and bparent[b] == -1 and label[b] == 2 and (deltatype == -1 or dual[b] < delta):
                    delta = dual[b]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                deltatype = 1
                delta = dual[0]
                for v in range(nv):
                    if dual[v] < delta:
                        delta = dual[v]
                if delta < 0:
                    delta = 0
            for v in range(nv):
                lb = label[inblossom[v]]
                if lb == 1:
                    dual[v] -= delta
                elif lb == 2:
                    dual[v] += delta
            for b in range(nv, n2):
                if bbase[b] >= 0 and bparent[b] == -1:
                    if label[b] == 1:
                        dual[b] += delta
                    elif label[b] == 2:
                        dual[b] -= delta
            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = True
                i = ei[deltaedge]
                j = ej[deltaedge]
                if label[inblossom[i]] == 0:
                    i, j = j, i
                queue[qlen[0]] = i
                qlen[0] += 1
            elif deltatype == 3:
                allowedge[deltaedge] = True
                queue[qlen[0]] = ei[deltaedge]
                qlen[0] += 1
            else:
                _expand_blossom(deltablossom, False, S, unused, nunused, nbbe, allowedge, estack)
        if not augmented:
            break
        for b in range(nv, n2):
            if bparent[b] == -1 and bbase[b] >= 0 and label[b] == 1 and dual[b] == 0:
                _expand_blossom(b, True, S, unused, nunused, nbbe, allowedge, estack)
    for v in range(nv):
        if mate[v] >= 0:
            mate[v] = endpoint[mate[v]]
    return mate


def max_weight_matching(num_vertices: int, edges, maxcardinality: bool = False) -> np.ndarray:
    """Maximum-weight matching of an undirected graph with integer weights.

    ``edges`` is a sequence of ``(i, j, w)``; returns ``mate`` with
    ``mate[v] = -1`` for unmatched vertices.  With ``maxcardinality`` the
    result is the heaviest among maximum-cardinality matchings.
    """
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    return max_weight_matching_arrays(
        int(num_vertices),
        np.ascontiguousarray(arr[:, 0]),
        np.ascontiguousarray(arr[:, 1]),
        np.ascontiguousarray(arr[:, 2]),
        bool(maxcardinality),
    )
