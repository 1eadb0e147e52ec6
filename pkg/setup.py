# Copyright © 2021. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

# pylint: skip-file
from setuptools import setup, find_packages


version = {}
with open('mimo/version.py') as ver_file:
    exec(ver_file.read(), version)

setup(
    version=version['__version__'],
    packages=find_packages(exclude=['mimo.test.files']),
)
