from setuptools import setup, find_packages

setup(
    name="fso_qkd_link",
    version="0.1",
    packages=find_packages(exclude=["tests"]),
    install_requires=['click', 'numpy', 'scipy', 'PyYAML'],
    python_requires='>=3.8',
    entry_points={
        'console_scripts': ['fsoqkd=src.app:main'],
    },
)
