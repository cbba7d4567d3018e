from setuptools import setup
import re
from os.path import dirname, isdir, isfile, join
from subprocess import CalledProcessError, check_output

tag_re = re.compile(r'\btag: %s([0-9][^,]*)\b')
version_re = re.compile('^Version: (.+)$', re.M)


def version_from_git_describe(version):
    """PEP 440 version from `git describe --tags` output such as v0.2.1-4-g1a2b3c4."""
    if version[0] == 'v':
        version = version[1:]

    commits_ahead, commit_hash = 0, None
    if '-' in version:
        version, commits_ahead, commit_hash = version.split('-')
        commits_ahead = int(commits_ahead)

    segments = version.split('.')
    if commits_ahead == 0:
        return '.'.join(segments)

    for pre_release in ['a', 'b', 'rc']:
        if pre_release in segments[-1]:
            segments[-1] = segments[-1].split(pre_release)[0]
            break
    segments.extend(['0'] * (3 - len(segments)))
    segments[-1] = str(int(segments[-1]) + 1)
    return '{}.dev{}+{}'.format('.'.join(segments), commits_ahead, commit_hash)


assert version_from_git_describe('v0.1.7.post2') == '0.1.7.post2'
assert version_from_git_describe('v0.0.1-25-gaf0bf53') == '0.0.2.dev25+gaf0bf53'
assert version_from_git_describe('v1-3-aqsfjbo') == '1.0.1.dev3+aqsfjbo'


def get_version():
    # Version injected by git-archive
    version = tag_re.search('$Format:%D$')
    if version:
        return version.group(1)

    d = dirname(__file__)
    if isdir(join(d, '.git')):
        try:
            return version_from_git_describe(check_output('git describe --tags'.split()).decode().strip())
        except CalledProcessError:
            return '0.0.1'
    if isfile(join(d, 'PKG-INFO')):
        with open(join(d, 'PKG-INFO')) as f:
            return version_re.search(f.read()).group(1)
    return '0.0.1'


setup(
    version=get_version(),
    name='nuclear_semimartingales',
    description='Stochastic integration and Itô formula checks for semimartingales valued in tempered '
                'distributions, on a Hermite coefficient model',
    long_description=open(join(dirname(__file__), 'README.md'), encoding='utf-8').read(),
    long_description_content_type='text/markdown',
    install_requires=['dessia_common>=0.16.1',
                      'plot_data',
                      'numpy>=1.20',
                      'scipy',
                      'pandas>=1.5',
                      'joblib'],
    python_requires='>=3.8',
    packages=['nuclear_semimartingales'],
    entry_points={'console_scripts': ['nuclear-semimartingales = nuclear_semimartingales.cli:main']},
)
