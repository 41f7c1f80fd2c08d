#    This script is part of pyatsh.
#
#    This program is free software: you can redistribute it and/or modify
#    it under the terms of the GNU General Public License as published by
#    the Free Software Foundation, either version 3 of the License, or
#    (at your option) any later version.
#
#    This program is distributed in the hope that it will be useful,
#    but WITHOUT ANY WARRANTY; without even the implied warranty of
#    MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#    GNU General Public License for more details.


""" This module contains a basic cache for expensive reference trajectories.
"""

import pickle
import threading

from collections import OrderedDict

import numpy as np

from . import config

# Set up logging
logger = config.get_logger(__name__)

__all__ = ['Cache']


class Cache(OrderedDict):
    """Custom dictionary for caching numpy arrays.

    Implements a maximum size [mb]. Oldest entries are dropped first.

    """
    def __init__(self, *args, **kwargs):
        self.size_limit = kwargs.pop("size_limit", None)
        self._lock = threading.RLock()
        OrderedDict.__init__(self, *args, **kwargs)

        self._check_size_limit()

    def __setitem__(self, key, value):
        with self._lock:
            OrderedDict.__setitem__(self, key, value)
            self._check_size_limit()

    def __getitem__(self, key):
        with self._lock:
            return OrderedDict.__getitem__(self, key)

    def get(self, key, fallback=None):
        try:
            return self.__getitem__(key)
        except KeyError:
            return fallback

    def get_or_compute(self, key, func, *args, **kwargs):
        """Return cached value for key or compute and store ``func(*args, **kwargs)``."""
        try:
            value = self[key]
            logger.debug(f'Cache hit for {key}')
            return value
        except KeyError:
            value = func(*args, **kwargs)
            self[key] = value
            return value

    def _check_size_limit(self):
        """Check size limit. Pop items if size limit reached."""
        if self.size_limit is not None:
            while self.size > self.size_limit and len(self) > 0:
                self.popitem(last=False)

    def __repr__(self):
        return 'Cache at {} (size limit: {}). {} items ({}mb).'.format(id(self),
                                                                      self.size_limit,
                                                                      len(self),
                                                                      self.size)

    @property
    def size(self):
        """Size [mb] of cached arrays."""
        return round(sum([np.asarray(v).nbytes for v in OrderedDict.values(self)]) / 1000 ** 2, 1)

    def __getstate__(self):
        d = self.__dict__.copy()
        d.pop('_lock', None)
        return d

    def __setstate__(self, d):
        self.__dict__.update(d)
        self._lock = threading.RLock()

    def __reduce__(self):
        items = list(OrderedDict.items(self))
        return (self.__class__, (), self.__getstate__(), None, iter(items))

    def save(self, filename='cache.pickle'):
        """ Save cache to file. """
        with self._lock:
            with open(filename, 'wb') as f:
                pickle.dump(self, f, protocol=pickle.HIGHEST_PROTOCOL)

    @classmethod
    def load(cls, filename):
        """Load cache from file."""
        with open(filename, 'rb') as f:
            cache = pickle.load(f)
        if not isinstance(cache, cls):
            raise TypeError(f'{filename} does not hold a {cls.__name__}')
        return cache
