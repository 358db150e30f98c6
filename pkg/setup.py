from setuptools import find_packages, setup

setup(
    name='polydisc_dilation',
    packages=find_packages(include=['src', 'src.*', 'config']),
    version='0.1.0',
    install_requires=[
        'joblib',
        'numpy',
        'pandas',
        'pydantic',
        'python-box',
        'python-dotenv',
        'PyYAML',
        'scipy',
    ],
    description='Isometric dilations, transfer-function symbols and von Neumann checks '
                'for commuting contraction tuples',
    author='santosh soni',
    license='',
    entry_points={
        'console_scripts': ['polydisc=src.components.cli_io:main'],
    },
)
